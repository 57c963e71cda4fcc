"""PRISM best-arm identification and its Conservative variant."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .env import EnvironmentHandle
from .melim import DEFAULT_PULL_CAP, PullOverflowError, median_eliminate

VARIANTS = ("standard", "conservative")
DELTA_MAX = {"standard": 0.5, "conservative": 0.6}
DEFAULT_PHASE_CAP = 40


@dataclass
class PhaseLog:
    phase: int
    active_before: list[int]
    me_output: int | None
    n_ell: int
    eps_ell: float | None
    me_delta: float | None
    phase_means: dict[int, float]
    threshold: float | None
    active_after: list[int]
    pulls_phase: int
    me_pulls: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phase_means"] = {str(k): v for k, v in self.phase_means.items()}
        return d


@dataclass
class TrialResult:
    chosen: int
    correct: bool
    total_pulls: int
    phases: list[PhaseLog] = field(default_factory=list)
    termination: str = "unique_survivor"
    detail: str = ""

    @property
    def stopping_phase(self) -> int:
        """First phase index whose active set is a singleton."""
        return len(self.phases) + 1

    def to_dict(self, trace: bool = False) -> dict:
        d = {
            "chosen": self.chosen,
            "correct": self.correct,
            "total_pulls": self.total_pulls,
            "n_phases": len(self.phases),
            "termination": self.termination,
        }
        if self.detail:
            d["detail"] = self.detail
        if trace:
            d["phases"] = [p.to_dict() for p in self.phases]
        return d


def theorem1_failure_budget(delta: float) -> float:
    """Failure probability allowed to standard PRISM at confidence ``delta``."""
    d2 = delta * delta
    return 3 * d2 / (1 - d2) + delta / (1 - delta) + 4 * d2 / (1 - d2) ** 2


def _check_delta(delta: float, variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not 0.0 < delta <= DELTA_MAX[variant]:
        raise ValueError(f"delta must lie in (0, {DELTA_MAX[variant]}] for the {variant} variant")


def phase_schedule(ell: int, delta: float, variant: str = "standard") -> tuple[int, float, float]:
    """``(n_ell, eps_ell, me_delta)`` for phase ``ell``."""
    _check_delta(delta, variant)
    if ell < 1:
        raise ValueError("phases are numbered from 1")
    if variant == "standard":
        return ell * 2 ** ell, math.sqrt(math.log(1 / delta) / 2 ** ell), delta ** ell
    return 2 ** ell, math.sqrt(math.log(ell * ell / delta) / 2 ** ell), delta / ell ** 2


def prism(
    env: EnvironmentHandle,
    delta: float = 0.1,
    variant: str = "standard",
    phase_cap: int = DEFAULT_PHASE_CAP,
    pull_cap: int = DEFAULT_PULL_CAP,
) -> TrialResult:
    _check_delta(delta, variant)
    if env.total != 0:
        raise ValueError("prism expects a fresh environment handle")
    active = np.arange(env.n_arms, dtype=np.int64)
    phases: list[PhaseLog] = []
    last_means: np.ndarray | None = None
    ell = 1
    termination, detail = "unique_survivor", ""
    while active.size > 1:
        if ell > phase_cap:
            termination = "phase_cap"
            break
        n_ell, eps, me_delta = phase_schedule(ell, delta, variant)
        try:
            if n_ell > pull_cap:
                raise PullOverflowError(n_ell, pull_cap, f"phase {ell} sampling: ")
            before = env.total
            i_ell, me_pulls = median_eliminate(env, active, eps, me_delta, pull_cap)
        except PullOverflowError as exc:
            termination, detail = "overflow", str(exc)
            break
        means = env.pull_many(active, n_ell) / n_ell
        # fresh phase estimates; ME samples are not reused
        threshold = float(means[np.searchsorted(active, i_ell)] - 2 * eps)
        survivors = active[means >= threshold]
        phases.append(
            PhaseLog(
                phase=ell,
                active_before=active.tolist(),
                me_output=i_ell,
                n_ell=n_ell,
                eps_ell=eps,
                me_delta=me_delta,
                phase_means=dict(zip(active.tolist(), means.tolist())),
                threshold=threshold,
                active_after=survivors.tolist(),
                pulls_phase=env.total - before,
                me_pulls=me_pulls,
            )
        )
        last_means = means
        active = survivors
        ell += 1

    if active.size == 1:
        chosen = int(active[0])
    elif last_means is not None:
        # last phase's means are aligned with its active_before set
        prev = np.asarray(phases[-1].active_before)
        order = np.lexsort((prev, -last_means))
        chosen = int(prev[order[0]])
    else:
        chosen = int(active[0])
    return TrialResult(
        chosen=chosen,
        correct=env.is_best(chosen),
        total_pulls=env.total,
        phases=phases,
        termination=termination,
        detail=detail,
    )


def best_arm_eliminated(result: TrialResult, env: EnvironmentHandle) -> bool:
    """Whether the true best arm was dropped from the active set in any phase."""
    for p in result.phases:
        had = any(env.is_best(a) for a in p.active_before)
        if had and not any(env.is_best(a) for a in p.active_after):
            return True
    return False
