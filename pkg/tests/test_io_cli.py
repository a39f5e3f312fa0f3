import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minary.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY, main
from minary.config import ConfigError
from minary.io import emit_config, jsonable, load_config, parse_config, scenario_to_config
from minary.scenarios import scenario


def _doc(**over):
    doc = {"n": 2, "m": 3, "k": 2, "alpha": 0.1, "competency": [[0.1, 0.5, 0.9], [0.4, 0.4, 0.4]], "seed": 3, "steps": 20}
    doc.update(over)
    return doc


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(_doc()))
    return p


def test_parse_minimal():
    setup = parse_config(_doc())
    assert setup.config.k == 2 and setup.config.mu.kind == "uniform01"


@pytest.mark.parametrize(
    "over,field",
    [({"k": 4}, "k"), ({"alpha": "x"}, "alpha"), ({"n": 2.5}, "n"), ({"competency": [[0.1]]}, "competency"), ({"mu": 3}, "mu")],
)
def test_parse_errors_name_field(over, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(_doc(**over))
    assert exc.value.field == field


def test_missing_key():
    doc = _doc()
    del doc["alpha"]
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.field == "alpha"


def test_halo_rule():
    doc = _doc(n=5, m=19, k=3, competency={"rule": "halo", "expert_row": 1, "expert_col": 14, "hi": 0.9, "lo": 0.5})
    setup = parse_config(doc)
    assert setup.C[0, 13] == 0.9 and setup.competency_rule["rule"] == "halo"


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(1, 5),
    m=st.integers(1, 6),
    data=st.data(),
)
def test_config_round_trip(n, m, data):
    k = data.draw(st.integers(1, m))
    alpha = data.draw(st.floats(1e-6, 0.66))
    seed = data.draw(st.integers(0, 2**63 - 1))
    C = np.array(data.draw(st.lists(st.lists(st.floats(0, 1), min_size=m, max_size=m), min_size=n, max_size=n)))
    kind = data.draw(st.sampled_from(["uniform01", "point", "beta"]))
    params = {"uniform01": [], "point": [0.25], "beta": [2.0, 3.0]}[kind]
    doc = {"n": n, "m": m, "k": k, "alpha": alpha, "mu": {"kind": kind, "params": params}, "competency": C.tolist(), "seed": seed, "steps": 7}
    setup = parse_config(doc)
    again = parse_config(json.loads(json.dumps(emit_config(setup))))
    assert again == setup


def test_scenario_configs_round_trip():
    for name in ("main", "generalist", "halo"):
        sc = scenario(name)
        setup = parse_config(scenario_to_config(sc))
        assert np.array_equal(setup.C, sc.C) and setup.config == sc.config


def test_jsonable():
    assert jsonable({"a": np.float64("inf"), "b": np.array([1, 2]), "c": np.bool_(True), "d": float("nan")}) == {
        "a": "inf",
        "b": [1, 2],
        "c": True,
        "d": "nan",
    }


# -- CLI ----------------------------------------------------------------------


def test_simulate_outputs(tmp_path, cfg_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == EXIT_OK
    with open(out / "series.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "gbar", "active", "d_1", "d_2"]
    assert len(rows) == 21
    assert all(len(r[2].split()) == 2 and all(1 <= int(a) <= 3 for a in r[2].split()) for r in rows[1:])
    assert all(abs(float(r[3]) + float(r[4])) <= 1e-12 for r in rows[1:])
    snap = json.loads((out / "delta_final.json").read_text())
    assert snap["t"] == 20 and np.array(snap["delta"]).shape == (2, 3)
    assert load_config(out / "config.json") == load_config(cfg_path)


def test_simulate_zero_steps(tmp_path, cfg_path):
    out = tmp_path / "zero"
    assert main(["simulate", "--config", str(cfg_path), "--steps", "0", "--out", str(out)]) == EXIT_OK
    assert (out / "series.csv").read_text().count("\n") == 1
    assert np.all(np.array(json.loads((out / "delta_final.json").read_text())["delta"]) == 0)


def test_simulate_deterministic(tmp_path, cfg_path):
    for d in ("a", "b"):
        main(["simulate", "--config", str(cfg_path), "--seed", "9", "--steps", "200", "--out", str(tmp_path / d)])
    for f in ("series.csv", "delta_final.json", "config.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_bad_config_exit(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(_doc(k=7)))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "[k]" in capsys.readouterr().err


def test_alpha_override_flag(tmp_path):
    p = tmp_path / "a.json"
    p.write_text(json.dumps(_doc(alpha=0.7)))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["simulate", "--config", str(p), "--allow-alpha-above-two-thirds", "--out", str(tmp_path / "x")]) == EXIT_OK


def test_missing_file_is_io_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == EXIT_IO


def test_invalid_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["theory", "--config", str(p)]) == EXIT_CONFIG


def test_reproduce(tmp_path, capsys):
    assert main(["reproduce", "halo", "--no-long-run", "--out", str(tmp_path)]) == EXIT_OK
    assert "verdict: PASS" in capsys.readouterr().out
    assert json.loads((tmp_path / "reproduce_halo.json").read_text())["pass"] is True


def test_reproduce_emit_config(tmp_path):
    target = tmp_path / "gen.json"
    assert main(["reproduce", "--scenario", "generalist", "--no-long-run", "--emit-config", str(target)]) == EXIT_OK
    assert load_config(target).config.m == 6


def test_theory(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps(scenario_to_config(scenario("generalist"))))
    assert main(["theory", "--config", str(p)]) == EXIT_OK
    assert "eta(m=6, k=3) = 0.166666666667" in capsys.readouterr().out


def test_verify_identities(tmp_path):
    assert main(["verify", "--suite", "identities", "--trials", "20", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "verify.json").read_text())["pass"] is True


def test_verify_minus_sign_variant_fails(tmp_path):
    code = main(["verify", "--suite", "consensus-moments", "--sign-variant", "paper", "--replicas", "10", "--out", str(tmp_path)])
    assert code == EXIT_VERIFY
