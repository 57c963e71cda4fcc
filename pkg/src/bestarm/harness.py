"""Monte Carlo runner, scaling sweeps, log-log fits and result persistence.

CSV columns (fixed order)::

    n, trials, completed, overflows, successes, success_rate, mean_pulls,
    stddev_pulls, total_pulls, best_eliminated, max_stopping_phase,
    H, G, lower_bound

``completed`` counts trials that did not overflow; the pull statistics and
success rate are taken over completed trials only.  ``total_pulls`` is the
exact integer sum behind ``mean_pulls``.  Floats are written with 17
significant digits so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .baseline import sufficient_m, uniform_trial
from .env import FAMILIES, BanditInstance, EnvironmentHandle, make_alpha_instance, shuffle_instance
from .melim import DEFAULT_PULL_CAP
from .prism import DEFAULT_PHASE_CAP, best_arm_eliminated, prism

ALGORITHMS = ("prism_standard", "prism_conservative", "uniform")

CSV_COLUMNS = (
    "n",
    "trials",
    "completed",
    "overflows",
    "successes",
    "success_rate",
    "mean_pulls",
    "stddev_pulls",
    "total_pulls",
    "best_eliminated",
    "max_stopping_phase",
    "H",
    "G",
    "lower_bound",
)


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    alpha: float = 0.3
    ns: tuple[int, ...] = (64,)
    mu0: float = 0.9
    gap_scale: float = 0.5
    family: str = "gaussian"
    sigma: float = 0.25
    algorithm: str = "prism_standard"
    delta: float = 0.1
    m: int | None = None  # uniform only; None means sufficient_m(gaps, delta)
    trials: int = 100
    master_seed: int = 0
    jobs: int = 1
    pull_cap: int = DEFAULT_PULL_CAP
    phase_cap: int = DEFAULT_PHASE_CAP
    c1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        if self.trials < 1:
            raise SpecError("trials must be >= 1")
        if not self.ns:
            raise SpecError("n list must be non-empty")
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise SpecError("n list must be strictly increasing")
        if any(n < 1 for n in self.ns):
            raise SpecError("every n must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise SpecError(f"algorithm must be one of {ALGORITHMS}")
        if self.family not in FAMILIES:
            raise SpecError(f"family must be one of {FAMILIES}")
        if self.m is not None and self.m < 1:
            raise SpecError("m must be >= 1")
        if self.jobs < 1:
            raise SpecError("jobs must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise SpecError("delta must lie in (0, 1)")

    def instance(self, n: int) -> BanditInstance:
        try:
            return make_alpha_instance(n, self.alpha, self.mu0, self.gap_scale, self.family, self.sigma)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ns"] = list(self.ns)
        return d


# -- spec files ---------------------------------------------------------------

_SPEC_KEYS = {
    "alpha": ("alpha", float),
    "n": ("ns", lambda v: tuple(int(x) for x in v.replace(",", " ").split())),
    "mu0": ("mu0", float),
    "gap_scale": ("gap_scale", float),
    "family": ("family", str),
    "sigma": ("sigma", float),
    "alg": ("algorithm", str),
    "delta": ("delta", float),
    "m": ("m", lambda v: None if v in ("", "auto", "sufficient") else int(v)),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "jobs": ("jobs", int),
    "pull_cap": ("pull_cap", lambda v: int(float(v))),
    "phase_cap": ("phase_cap", int),
    "c1": ("c1", float),
}


def parse_spec_text(text: str, base: ExperimentSpec | None = None) -> ExperimentSpec:
    """Parse ``key = value`` lines (``#`` comments, blank lines ignored).

    Keys: alpha, n (comma or space separated list), mu0, gap_scale, family,
    sigma, alg, delta, m (integer or ``sufficient``), trials, seed, jobs,
    pull_cap, phase_cap, c1.
    """
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SPEC_KEYS:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
        name, conv = _SPEC_KEYS[key]
        try:
            updates[name] = conv(value)
        except ValueError as exc:
            raise SpecError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return replace(base or ExperimentSpec(), **updates)


def load_spec(path: str | Path) -> ExperimentSpec:
    return parse_spec_text(Path(path).read_text())


# -- trials -------------------------------------------------------------------


@dataclass
class TrialRecord:
    trial_id: int
    chosen: int
    correct: bool
    pulls: int
    termination: str
    n_phases: int
    best_eliminated: bool


def _shuffle_seed(master_seed: int, n: int, trial_id: int) -> int:
    return int(np.random.SeedSequence([master_seed, n, trial_id, 1]).generate_state(1)[0])


def _m_for(spec: ExperimentSpec, inst: BanditInstance) -> int:
    if spec.m is not None:
        return spec.m
    if inst.n_arms < 2:
        return 1
    return sufficient_m(metrics.gaps(inst), spec.delta)


def run_one(spec: ExperimentSpec, inst: BanditInstance, n: int, trial_id: int, m: int | None) -> TrialRecord:
    shuffled = shuffle_instance(inst, _shuffle_seed(spec.master_seed, n, trial_id))
    env = EnvironmentHandle(shuffled, spec.master_seed, trial_id)
    if spec.algorithm == "uniform":
        res = uniform_trial(env, m)
        eliminated = not res.correct
    else:
        variant = "standard" if spec.algorithm == "prism_standard" else "conservative"
        res = prism(env, spec.delta, variant, spec.phase_cap, spec.pull_cap)
        eliminated = best_arm_eliminated(res, env)
    assert res.total_pulls == env.total
    return TrialRecord(
        trial_id, res.chosen, bool(res.correct), res.total_pulls, res.termination, len(res.phases), eliminated
    )


def _run_chunk(args) -> list[TrialRecord]:
    spec, inst, n, ids, m = args
    return [run_one(spec, inst, n, t, m) for t in ids]


def run_records(spec: ExperimentSpec, n: int) -> list[TrialRecord]:
    """All trials for one n, ordered by trial id whatever the worker schedule."""
    inst = spec.instance(n)
    m = _m_for(spec, inst) if spec.algorithm == "uniform" else None
    ids = list(range(spec.trials))
    if spec.jobs == 1:
        return _run_chunk((spec, inst, n, ids, m))
    chunks = [ids[i :: spec.jobs * 4] for i in range(spec.jobs * 4)]
    with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
        parts = pool.map(_run_chunk, [(spec, inst, n, c, m) for c in chunks if c])
        records = [r for part in parts for r in part]
    return sorted(records, key=lambda r: r.trial_id)


@dataclass
class AggregateRow:
    n: int
    trials: int
    completed: int
    overflows: int
    successes: int
    success_rate: float
    mean_pulls: float
    stddev_pulls: float
    total_pulls: int
    best_eliminated: int
    max_stopping_phase: int
    H: float
    G: float
    lower_bound: float


def aggregate(spec: ExperimentSpec, n: int, records: Sequence[TrialRecord]) -> AggregateRow:
    done = [r for r in records if r.termination != "overflow"]
    pulls = np.array([r.pulls for r in done], dtype=np.int64)
    total = int(pulls.sum())
    k = len(done)
    mean = total / k if k else math.nan
    std = float(np.std(pulls, ddof=1)) if k > 1 else 0.0
    inst = spec.instance(n)
    if inst.n_arms > 1:
        g = metrics.gaps(inst)
        H = metrics.hardness_H(g)
        G = metrics.hardness_G(g) if np.all(g <= 1.0) else math.nan
        if spec.algorithm == "uniform":
            lb = metrics.alpha_lb(n, spec.alpha, spec.delta)
        else:
            lb = metrics.adaptive_lb(H, spec.delta, spec.c1).value
    else:
        H = G = lb = math.nan
    successes = sum(r.correct for r in done)
    return AggregateRow(
        n=n,
        trials=len(records),
        completed=k,
        overflows=len(records) - k,
        successes=successes,
        success_rate=successes / k if k else math.nan,
        mean_pulls=mean,
        stddev_pulls=std,
        total_pulls=total,
        best_eliminated=sum(r.best_eliminated for r in done),
        max_stopping_phase=max((r.n_phases + 1 for r in done if r.termination == "unique_survivor"), default=0),
        H=H,
        G=G,
        lower_bound=lb,
    )


def run_trials(spec: ExperimentSpec, n: int | None = None) -> AggregateRow:
    n = spec.ns[0] if n is None else n
    return aggregate(spec, n, run_records(spec, n))


# -- sweeps -------------------------------------------------------------------


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """OLS of ln(y) on ln(x); returns ``(slope, intercept, r_squared)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (x, y) points")
    if np.any(pts <= 0):
        raise ValueError("log-log fit needs positive coordinates")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("x values are degenerate")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    syy = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / syy if syy > 0 else 1.0
    return slope, intercept, r2


@dataclass
class AggregateResult:
    spec: ExperimentSpec
    rows: list[AggregateRow] = field(default_factory=list)
    slope: float = math.nan
    intercept: float = math.nan
    r_squared: float = math.nan

    @property
    def overflows(self) -> int:
        return sum(r.overflows for r in self.rows)


def scaling_sweep(spec: ExperimentSpec, min_points: int = 4) -> AggregateResult:
    if len(spec.ns) < min_points:
        raise SpecError(f"a sweep needs at least {min_points} values of n")
    if spec.ns[-1] < 4 * spec.ns[0]:
        raise SpecError("a sweep must span at least two octaves of n")
    rows = [run_trials(spec, n) for n in spec.ns]
    pts = [(r.n, r.mean_pulls) for r in rows if r.completed]
    result = AggregateResult(spec, rows)
    if len(pts) >= 2:
        result.slope, result.intercept, result.r_squared = fit_loglog_slope(pts)
    return result


# -- persistence --------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def rows_to_csv(rows: Sequence[AggregateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv_rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def instance_hash(instance: BanditInstance) -> str:
    """Git blob-style SHA-1 of the canonical instance JSON."""
    body = json.dumps(instance.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def run_record(result: AggregateResult) -> dict:
    spec = result.spec
    return {
        "spec": spec.to_dict(),
        "instances": {str(n): instance_hash(spec.instance(n)) for n in spec.ns},
        "rows": [{f.name: _json_safe(getattr(r, f.name)) for f in fields(r)} for r in result.rows],
        "fit": {
            "slope": _json_safe(result.slope),
            "intercept": _json_safe(result.intercept),
            "r_squared": _json_safe(result.r_squared),
        },
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
    }


def write_results(result: AggregateResult, out: str | Path) -> tuple[Path, Path]:
    """Write ``<out>.csv`` and ``<out>.json``; returns both paths."""
    out = Path(out)
    stem = out.with_suffix("") if out.suffix in (".csv", ".json") else out
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    csv_path.write_text(rows_to_csv(result.rows))
    json_path.write_text(json.dumps(run_record(result), indent=2) + "\n")
    return csv_path, json_path
