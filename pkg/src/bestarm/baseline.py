"""Non-adaptive equal-allocation sampling and its Hoeffding budget."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .env import EnvironmentHandle
from .prism import PhaseLog, TrialResult

M_SEARCH_MAX = 2 ** 40


@dataclass(frozen=True)
class UniformPlan:
    m: int
    n_arms: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def total(self) -> int:
        return self.m * self.n_arms


def _empirical_argmax(sums: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the lowest external index
    return int(np.argmax(sums))


def uniform_best(env: EnvironmentHandle, m: int) -> tuple[int, int]:
    """Pull every arm ``m`` times, return ``(empirical_argmax, total_pulls)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if env.total != 0:
        raise ValueError("uniform_best expects a fresh environment handle")
    sums = env.pull_many(np.arange(env.n_arms), m)
    return _empirical_argmax(sums), env.total


def uniform_trial(env: EnvironmentHandle, m: int) -> TrialResult:
    """:func:`uniform_best` packaged as a one-phase :class:`TrialResult`."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if env.total != 0:
        raise ValueError("uniform_trial expects a fresh environment handle")
    arms = list(range(env.n_arms))
    sums = env.pull_many(arms, m)
    chosen = _empirical_argmax(sums)
    phase = PhaseLog(
        phase=1,
        active_before=arms,
        me_output=None,
        n_ell=m,
        eps_ell=None,
        me_delta=None,
        phase_means=dict(zip(arms, (sums / m).tolist())),
        threshold=None,
        active_after=[chosen],
        pulls_phase=env.total,
    )
    return TrialResult(chosen, env.is_best(chosen), env.total, [phase])


def _union_bound(g: np.ndarray, m: int) -> float:
    return math.fsum(2.0 * np.exp(-m * g * g / 2.0))


def sufficient_m(g: Sequence[float], delta: float) -> int:
    """Smallest m with ``sum_i 2 exp(-m gap_i^2 / 2) <= delta``."""
    g = np.asarray(g, dtype=float)
    if g.size == 0 or np.any(~(g > 0)):
        raise ValueError("gaps must be a non-empty vector of positive values")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    target = delta * (1.0 + 1e-12)  # absorb last-ulp noise of the sum
    if _union_bound(g, M_SEARCH_MAX) > target:
        raise ValueError(f"no m <= 2**40 meets the union bound at delta={delta}")
    lo, hi = 1, M_SEARCH_MAX
    while lo < hi:
        mid = (lo + hi) // 2
        if _union_bound(g, mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo
