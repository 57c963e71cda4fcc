"""Bandit instances and the sampling handle algorithms pull through.

Means are stored in internal rank order (rank 0 is the best arm).  Algorithms
only ever see external arm indices; the permutation mapping external index to
internal rank stays inside this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

FAMILIES = ("bernoulli", "gaussian", "deterministic")
DEFAULT_SIGMA = 0.25


@dataclass(frozen=True)
class BanditInstance:
    means: tuple[float, ...]
    family: str = "bernoulli"
    sigma: float = DEFAULT_SIGMA
    permutation: tuple[int, ...] = ()
    permutation_seed: int | None = None

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        object.__setattr__(self, "means", means)
        if not means:
            raise ValueError("instance needs at least one arm")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian sigma must be positive")
        if any(not 0.0 <= m <= 1.0 for m in means):
            raise ValueError("means must lie in [0, 1]")
        # strict only against the best arm; suboptimal ties are fine
        if len(means) > 1 and not means[0] > means[1]:
            raise ValueError("best mean must be strictly larger than all others")
        if any(b > a for a, b in zip(means[1:], means[2:])):
            raise ValueError("means must be listed in non-increasing rank order")
        perm = tuple(int(p) for p in self.permutation) or tuple(range(len(means)))
        if sorted(perm) != list(range(len(means))):
            raise ValueError("permutation must be a bijection over the arms")
        object.__setattr__(self, "permutation", perm)

    @property
    def n_arms(self) -> int:
        return len(self.means)

    @property
    def n(self) -> int:
        """Number of suboptimal arms."""
        return len(self.means) - 1

    def external_means(self) -> np.ndarray:
        return np.asarray(self.means)[list(self.permutation)]

    def to_dict(self) -> dict:
        d = {"means": list(self.means), "family": self.family}
        if self.family == "gaussian":
            d["sigma"] = self.sigma
        d["permutation_seed"] = self.permutation_seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BanditInstance":
        inst = cls(
            means=tuple(d["means"]),
            family=d.get("family", "bernoulli"),
            sigma=d.get("sigma", DEFAULT_SIGMA),
        )
        seed = d.get("permutation_seed")
        return inst if seed is None else shuffle_instance(inst, seed)


def load_instance(path: str | Path) -> BanditInstance:
    return BanditInstance.from_dict(json.loads(Path(path).read_text()))


def save_instance(instance: BanditInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2) + "\n")


def make_alpha_instance(
    n: int,
    alpha: float,
    mu0: float = 1.0,
    gap_scale: float = 1.0,
    family: str = "bernoulli",
    sigma: float = DEFAULT_SIGMA,
    seed: int | None = None,
) -> BanditInstance:
    """Instance with ``mu_i = mu0 - gap_scale * (i/n)**alpha`` for i = 1..n.

    With ``seed=None`` the permutation is the identity, otherwise it is drawn
    as in :func:`shuffle_instance`.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if not 0.0 < mu0 <= 1.0:
        raise ValueError("mu0 must lie in (0, 1]")
    if not 0.0 < gap_scale <= mu0:
        raise ValueError("gap_scale must lie in (0, mu0]")
    i = np.arange(1, n + 1)
    means = np.concatenate(([mu0], mu0 - gap_scale * (i / n) ** alpha))
    # mu0 - gap_scale can round to a hair below zero
    means = np.clip(means, 0.0, 1.0)
    inst = BanditInstance(tuple(means), family=family, sigma=sigma)
    return inst if seed is None else shuffle_instance(inst, seed)


def shuffle_instance(instance: BanditInstance, seed: int) -> BanditInstance:
    perm = np.random.default_rng(seed).permutation(instance.n_arms)
    return BanditInstance(
        instance.means,
        family=instance.family,
        sigma=instance.sigma,
        permutation=tuple(int(p) for p in perm),
        permutation_seed=int(seed),
    )


@dataclass
class EnvironmentHandle:
    """Per-trial sampling channel with an exact pull ledger.

    The random stream is a Philox generator keyed by ``(master_seed,
    trial_id)``, so the same request sequence always yields the same rewards.
    ``pull_many`` returns the *sum* of ``k`` rewards drawn in one shot
    (Binomial / Normal sums are exact in distribution), which keeps
    million-pull phases cheap while the ledger still counts every pull.
    """

    instance: BanditInstance
    master_seed: int = 0
    trial_id: int = 0
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._means = self.instance.external_means()
        self._best = int(self.instance.permutation.index(0))
        self.counts = np.zeros(self.instance.n_arms, dtype=np.int64)
        ss = np.random.SeedSequence([int(self.master_seed), int(self.trial_id)])
        self._rng = np.random.Generator(np.random.Philox(ss))

    @property
    def n_arms(self) -> int:
        return self.instance.n_arms

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def pull(self, arm: int) -> float:
        return float(self.pull_many([arm], [1])[0])

    def pull_many(self, arms: Sequence[int], counts: Sequence[int] | int) -> np.ndarray:
        """Pull ``arms[j]`` exactly ``counts[j]`` times; return per-entry reward sums."""
        arms = np.asarray(arms, dtype=np.int64)
        k = np.broadcast_to(np.asarray(counts, dtype=np.int64), arms.shape)
        if arms.size and (arms.min() < 0 or arms.max() >= self.n_arms):
            raise IndexError(f"arm index out of range [0, {self.n_arms})")
        if k.size and k.min() < 0:
            raise ValueError("pull counts must be non-negative")
        mu = self._means[arms]
        family = self.instance.family
        if family == "deterministic":
            sums = k * mu
        elif family == "bernoulli":
            sums = self._rng.binomial(k, mu).astype(float)
        else:
            sums = self._rng.normal(k * mu, self.instance.sigma * np.sqrt(k))
        np.add.at(self.counts, arms, k)
        return np.asarray(sums, dtype=float)

    def is_best(self, arm: int) -> bool:
        """Evaluation hook for scoring a finished trial; algorithms must not call it."""
        return int(arm) == self._best
