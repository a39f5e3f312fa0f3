"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
3 verification or golden mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, validate_config
from .io import RunSetup, delta_snapshot, emit_config, load_config, parse_config, scenario_to_config, write_json, write_series
from .model import run
from .scenarios import SCENARIOS, UnknownScenario, run_scenario, scenario
from .theory import DERIVED, PAPER, averages, conditional_mean, conditional_variance, eta, limit_expectation
from . import verification

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3


def _setup(args) -> RunSetup:
    if getattr(args, "allow_alpha_above_two_thirds", False):
        # the override must be in place before alpha is validated
        with open(args.config, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}", "<json>") from None
        if isinstance(doc, dict):
            doc["allow_alpha_above_two_thirds"] = True
        setup = parse_config(doc)
    else:
        setup = load_config(args.config)
    changes = {}
    if getattr(args, "steps", None) is not None:
        changes["steps"] = args.steps
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        setup.config = dataclasses.replace(setup.config, **changes)
        validate_config(setup.config, setup.C, setup.delta0)
    return setup


def cmd_simulate(args) -> int:
    setup = _setup(args)
    cfg = setup.config
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    last = {"delta": np.zeros((cfg.n, cfg.m)) if setup.delta0 is None else np.array(setup.delta0, dtype=float), "t": 0}

    def traces():
        for trace in run(cfg, setup.C, setup.delta0):
            last["delta"], last["t"] = trace.delta_after, trace.t
            yield trace

    rows = write_series(out / "series.csv", traces(), cfg.n)
    write_json(out / "delta_final.json", delta_snapshot(setup, last["delta"], last["t"]))
    write_json(out / "config.json", emit_config(setup))
    elapsed = time.perf_counter() - started
    delta = last["delta"]
    print(f"minary {__version__}: {rows} steps, seed {cfg.seed}, n={cfg.n} m={cfg.m} k={cfg.k} alpha={cfg.alpha}")
    if cfg.allow_alpha_above_two_thirds:
        print("note: alpha bound relaxed to (0, 1)")
    print(f"final max|delta| = {np.abs(delta).max():.6g}, row means = {np.round(delta.mean(axis=1), 6).tolist()}")
    print(f"wrote {out / 'series.csv'}, {out / 'delta_final.json'} in {elapsed:.2f}s")
    return EXIT_OK


def _print_checks(checks):
    for c in checks:
        mark = "PASS" if c["pass"] else "FAIL"
        print(f"  [{mark}] {c['name']}: {c['value']:.3g} (threshold {c['threshold']:.3g})")
        if "derived" in c:
            d, p = c["derived"], c["paper"]
            print(
                f"         derived-sign target {d['target']:.6f} z={d['z_score']:.2f} | "
                f"paper-sign target {p['target']:.6f} z={p['z_score']:.2f} | estimate {d['estimate']:.6f}"
            )


def cmd_verify(args) -> int:
    suites = verification.SUITES if args.suite == "all" else (args.suite,)
    setup = None
    if args.config and args.config != "random":
        setup = _setup(args)
    seed = 0 if args.seed is None else args.seed
    trials = args.trials
    results = {}
    for name in suites:
        kw = {"seed": seed}
        if name == "limit" and setup is not None:
            checks = verification.limit_mc_suite(
                setup.config, setup.C, replicas=args.replicas or 400, burn_in=args.burn_in,
                measure_steps=args.measure_steps, seed=seed, workers=args.workers,
            )
        elif name == "consensus-moments":
            if setup is not None:
                kw.update(cfg=setup.config, C=setup.C)
            checks = verification.consensus_moments_suite(
                replicas=args.replicas or 20,
                sign_variant=args.sign_variant, workers=args.workers, **kw,
            )
        else:
            if trials is not None:
                key = {"conservation": "trials", "affine": "trials", "identities": "trials", "limit": "trials", "lipschitz": "pieces"}[name]
                kw[key] = trials
            checks = verification.run_suite(name, **kw)
        results[name] = checks
        print(f"{name}:")
        _print_checks(checks)

    passed = all(c["pass"] for checks in results.values() for c in checks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(
        out / "verify.json",
        {"version": __version__, "suite": args.suite, "seed": seed, "sign_variant": args.sign_variant, "pass": passed, "suites": results},
    )
    print("overall:", "PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY


def _fmt(x, width=10):
    return f"{float(x):>{width}.6f}"


def cmd_reproduce(args) -> int:
    name = args.name or args.scenario
    if name is None:
        raise UnknownScenario("no scenario given")
    sc = scenario(name)
    if args.emit_config:
        write_json(args.emit_config, scenario_to_config(sc))
    verdict = run_scenario(name, long_run=not args.no_long_run)
    tr = verdict.trace
    labels = [j + 1 for j in tr.active]
    print(f"scenario {name}: active dimensions {labels}, signals {tr.signals.tolist()}")
    print("step 1: raw responses r = x - C")
    for i, who in enumerate(sc.perspectives):
        print(f"  {who:<20}" + "".join(_fmt(v) for v in tr.raw[i]))
    print("step 3-5: averaged R_i, learning d_i (computed | exact rational)")
    for i, who in enumerate(sc.perspectives):
        print(
            f"  {who:<20} R={_fmt(tr.averaged[i])} d={_fmt(tr.learning[i])}"
            f" | R={_fmt(verdict.exact['averaged'][i])} d={_fmt(verdict.exact['learning'][i])}"
        )
    print(f"step 4: G = {tr.consensus:.6f}   normalized = {tr.normalized:.6f}   sum d = {tr.learning.sum():.2e}")
    print("step 6: delta after update (active columns)")
    for i, who in enumerate(sc.perspectives):
        print(f"  {who:<20}" + "".join(_fmt(tr.delta_after[i, j]) for j in tr.active))
    print("checks (value vs expected, tolerance, provenance):")
    for c in verdict.checks:
        if c.provenance == "printed" or not c.passed:
            mark = "ok " if c.passed else "BAD"
            print(f"  {mark} {c.name:<18} {c.value: .6f} vs {c.expected: .6f} (±{c.tol:g}, {c.provenance})")
    n_exact = sum(1 for c in verdict.checks if c.provenance == "exact-rational")
    print(f"  {n_exact} exact-rational checks at 1e-12: {'all pass' if all(c.passed for c in verdict.checks if c.provenance == 'exact-rational') else 'FAILURES'}")
    if verdict.report:
        print("long-run report (not golden):")
        for key, value in verdict.report.items():
            print(f"  {key}: {value}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(
            out / f"reproduce_{name}.json",
            {
                "scenario": name,
                "pass": verdict.passed,
                "checks": [dict(dataclasses.asdict(c), passed=c.passed) for c in verdict.checks],
                "report": verdict.report,
            },
        )
    print("verdict:", "PASS" if verdict.passed else "FAIL")
    return EXIT_OK if verdict.passed else EXIT_VERIFY


def cmd_theory(args) -> int:
    setup = _setup(args)
    cfg, C = setup.config, setup.C
    np.set_printoptions(precision=6, suppress=True, linewidth=120)
    print(f"eta(m={cfg.m}, k={cfg.k}) = {eta(cfg.m, cfg.k):.12g}")
    avg = averages(C)
    print(f"global mean = {avg.global_mean:.6f}")
    print("limit of E[delta]:")
    print(limit_expectation(C, cfg.m, cfg.k))
    print(f"signal mean = {cfg.mu.mean:.6f}, sd = {cfg.mu.stddev:.6f}")
    print(f"{'j':>4} {'mean (derived)':>16} {'mean (paper)':>14} {'variance':>12}")
    for j in range(cfg.m):
        print(
            f"{j + 1:>4} {conditional_mean(C, cfg.mu, cfg.k, j, DERIVED):>16.6f}"
            f" {conditional_mean(C, cfg.mu, cfg.k, j, PAPER):>14.6f}"
            f" {conditional_variance(C, cfg.mu, cfg.k, j):>12.6g}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minary", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run config")
        p.add_argument("--seed", type=int)
        p.add_argument("--allow-alpha-above-two-thirds", action="store_true", help="relax alpha to (0, 1)")

    p = sub.add_parser("simulate", help="run the dynamics and write series.csv / delta_final.json")
    common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run verification suites, write verify.json")
    common(p, config_required=False)
    p.add_argument("--suite", choices=verification.SUITES + ("all",), default="all")
    p.add_argument("--trials", type=int)
    p.add_argument("--replicas", type=int, help="ensemble size (default 400 for limit, 20 for consensus-moments)")
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--measure-steps", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sign-variant", choices=(DERIVED, PAPER), default=DERIVED)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce", help="replay a worked example")
    p.add_argument("name", nargs="?", choices=sorted(SCENARIOS))
    p.add_argument("--scenario", choices=sorted(SCENARIOS))
    p.add_argument("--out")
    p.add_argument("--emit-config", help="write the scenario as a run config")
    p.add_argument("--no-long-run", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("theory", help="print closed-form limits and consensus moments")
    common(p)
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
