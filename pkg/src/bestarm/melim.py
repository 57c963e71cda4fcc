"""Median Elimination: an (epsilon, delta)-PAC arm selector built on repeated halving."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .env import EnvironmentHandle

DEFAULT_PULL_CAP = 2 ** 31


class PullOverflowError(RuntimeError):
    """A schedule asked for more pulls per arm than the configured ceiling."""

    def __init__(self, requested: int, cap: int, where: str = ""):
        self.requested = requested
        self.cap = cap
        self.where = where
        super().__init__(f"{where}requested {requested} pulls per arm, cap is {cap}")


@dataclass(frozen=True)
class MERound:
    eps: float
    delta: float
    m: int


@dataclass(frozen=True)
class MEConfig:
    epsilon: float
    delta: float
    pull_cap: int = DEFAULT_PULL_CAP

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    def round_schedule(self, n_arms: int) -> list[MERound]:
        """Rounds needed to cut ``n_arms`` down to one.

        eps_l = (3/4)**(l-1) * eps/4, delta_l = delta / 2**l and every surviving
        arm is pulled ``ceil(4/eps_l**2 * ln(3/delta_l))`` times.
        """
        rounds = []
        eps_l, delta_l, size = self.epsilon / 4.0, self.delta / 2.0, n_arms
        while size > 1:
            m = math.ceil(4.0 / eps_l ** 2 * math.log(3.0 / delta_l))
            rounds.append(MERound(eps_l, delta_l, max(m, 1)))
            size = (size + 1) // 2
            eps_l *= 0.75
            delta_l /= 2.0
        return rounds

    def planned_pulls(self, n_arms: int) -> int:
        size, total = n_arms, 0
        for r in self.round_schedule(n_arms):
            total += size * r.m
            size = (size + 1) // 2
        return total


def median_eliminate(
    env: EnvironmentHandle,
    arms: Iterable[int],
    epsilon: float,
    delta: float,
    pull_cap: int = DEFAULT_PULL_CAP,
) -> tuple[int, int]:
    """Return ``(chosen_arm, pulls_used)``.

    Each round samples the survivors afresh and keeps the top ``ceil(|S|/2)``
    by empirical mean, ties going to the lower external index.
    """
    survivors = np.array(sorted(set(int(a) for a in arms)), dtype=np.int64)
    if survivors.size == 0:
        raise ValueError("median elimination needs a non-empty arm set")
    cfg = MEConfig(epsilon, delta, pull_cap)
    schedule = cfg.round_schedule(survivors.size)
    for r in schedule:
        if r.m > pull_cap:
            raise PullOverflowError(r.m, pull_cap, "median elimination: ")
    start = env.total
    for r in schedule:
        means = env.pull_many(survivors, r.m) / r.m
        keep = (survivors.size + 1) // 2
        # lexsort: last key is primary -> descending mean, then ascending index
        order = np.lexsort((survivors, -means))[:keep]
        survivors = np.sort(survivors[order])
    return int(survivors[0]), env.total - start
