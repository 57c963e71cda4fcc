"""``bestarm`` command line: gen | run | mc | scaling | bounds.

Exit codes: 0 success, 2 invalid spec or arguments, 3 pull overflow.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, metrics
from .baseline import sufficient_m, uniform_trial
from .env import FAMILIES, EnvironmentHandle, load_instance, make_alpha_instance, save_instance
from .harness import ALGORITHMS, ExperimentSpec, SpecError
from .prism import prism

EXIT_OK, EXIT_SPEC, EXIT_OVERFLOW = 0, 2, 3


def _add_recipe(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="key = value experiment file; flags override it")
    p.add_argument("--instance", help="instance JSON file (run/bounds)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", help="number of suboptimal arms, or a comma list for sweeps")
    p.add_argument("--mu0", type=float)
    p.add_argument("--gap-scale", type=float)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--sigma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--alg", choices=ALGORITHMS + ("prism", "conservative"))
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--pull-cap", type=float)
    p.add_argument("--out")
    p.add_argument("--trace", action="store_true")


def _spec_from_args(a: argparse.Namespace) -> ExperimentSpec:
    spec = harness.load_spec(a.spec) if a.spec else ExperimentSpec()
    updates = {}
    for flag, name in [
        ("alpha", "alpha"),
        ("mu0", "mu0"),
        ("gap_scale", "gap_scale"),
        ("family", "family"),
        ("sigma", "sigma"),
        ("delta", "delta"),
        ("m", "m"),
        ("trials", "trials"),
        ("seed", "master_seed"),
        ("jobs", "jobs"),
    ]:
        v = getattr(a, flag)
        if v is not None:
            updates[name] = v
    if a.n is not None:
        try:
            updates["ns"] = tuple(int(x) for x in a.n.replace(",", " ").split())
        except ValueError as exc:
            raise SpecError(f"bad --n value {a.n!r}") from exc
    if a.alg is not None:
        updates["algorithm"] = {"prism": "prism_standard", "conservative": "prism_conservative"}.get(a.alg, a.alg)
    if a.pull_cap is not None:
        updates["pull_cap"] = int(a.pull_cap)
    return replace(spec, **updates)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(a) -> int:
    spec = _spec_from_args(a)
    inst = make_alpha_instance(spec.ns[0], spec.alpha, spec.mu0, spec.gap_scale, spec.family, spec.sigma, seed=a.seed)
    if a.out:
        save_instance(inst, a.out)
    else:
        print(json.dumps(inst.to_dict(), indent=2))
    return EXIT_OK


def _instance(a, spec: ExperimentSpec):
    return load_instance(a.instance) if a.instance else spec.instance(spec.ns[0])


def cmd_run(a) -> int:
    spec = _spec_from_args(a)
    inst = _instance(a, spec)
    env = EnvironmentHandle(inst, spec.master_seed, 0)
    if spec.algorithm == "uniform":
        m = spec.m if spec.m is not None else sufficient_m(metrics.gaps(inst), spec.delta)
        res = uniform_trial(env, m)
    else:
        variant = "standard" if spec.algorithm == "prism_standard" else "conservative"
        res = prism(env, spec.delta, variant, spec.phase_cap, spec.pull_cap)
    _emit(json.dumps(res.to_dict(trace=a.trace), indent=2) + "\n", a.out)
    return EXIT_OVERFLOW if res.termination == "overflow" else EXIT_OK


def _report(result: harness.AggregateResult, out: str | None) -> int:
    if out:
        harness.write_results(result, out)
    else:
        sys.stdout.write(harness.rows_to_csv(result.rows))
    if len(result.rows) > 1:
        print(
            f"slope={result.slope:.4f} intercept={result.intercept:.4f} r2={result.r_squared:.4f}",
            file=sys.stderr,
        )
    return EXIT_OVERFLOW if result.overflows else EXIT_OK


def cmd_mc(a) -> int:
    spec = _spec_from_args(a)
    rows = [harness.run_trials(spec, n) for n in spec.ns]
    return _report(harness.AggregateResult(spec, rows), a.out)


def cmd_scaling(a) -> int:
    spec = _spec_from_args(a)
    return _report(harness.scaling_sweep(spec), a.out)


def cmd_bounds(a) -> int:
    spec = _spec_from_args(a)
    inst = _instance(a, spec)
    alpha = None if a.instance else spec.alpha
    tb = metrics.theory_bounds(inst, spec.delta, spec.c1, alpha)
    text = json.dumps(tb.to_dict(), indent=2) + "\n"
    if a.out:
        stem = Path(a.out).with_suffix("")
        stem.with_suffix(".json").write_text(text)
        with stem.with_suffix(".csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "count"])
            for s, members in sorted(tb.slices.items()):
                w.writerow([s, len(members)])
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bestarm", description="Best-arm identification experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [
        ("gen", cmd_gen, "write an alpha-parameterized instance file"),
        ("run", cmd_run, "run a single trial and print the TrialResult JSON"),
        ("mc", cmd_mc, "Monte Carlo trials at fixed n"),
        ("scaling", cmd_scaling, "sweep over n and fit the log-log slope"),
        ("bounds", cmd_bounds, "theory bounds and gap slices for an instance"),
    ]:
        p = sub.add_parser(name, help=help_)
        _add_recipe(p)
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"bestarm: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
