"""Gaps, hardness measures, lower bounds and the gap slicing diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .env import BanditInstance

ADAPTIVE_DELTA_MAX = math.exp(-8) / 8
NONADAPTIVE_DELTA_MAX = math.exp(-3) / 24


class Bound(NamedTuple):
    value: float
    in_range: bool


class NonAdaptiveBound(NamedTuple):
    lb_any: float
    lb_worst: float
    in_range: bool


def gaps(instance: BanditInstance) -> np.ndarray:
    """Gaps ``mu_0 - mu_i`` for internal ranks 1..n."""
    if instance.n_arms < 2:
        raise ValueError("a single-arm instance has no gaps")
    means = np.asarray(instance.means)
    return means[0] - means[1:]


def _check_positive(g: Sequence[float]) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        raise ValueError("empty gap vector")
    if np.any(~(g > 0)):
        raise ValueError("all gaps must be strictly positive")
    return g


def hardness_H(g: Sequence[float]) -> float:
    g = _check_positive(g)
    return math.fsum(g ** -2.0)


def hardness_G(g: Sequence[float]) -> float:
    g = _check_positive(g)
    if np.any(g > 1.0):
        raise ValueError("G is defined for gaps in (0, 1]")
    inv2 = g ** -2.0
    return math.fsum(inv2 * np.log2(inv2))


def adaptive_lb(H: float, delta: float, c1: float = 1.0) -> Bound:
    ok = 0.0 < delta < ADAPTIVE_DELTA_MAX
    return Bound(c1 * H * math.log(1.0 / (8.0 * delta)), ok)


def nonadaptive_lb(H: float, n: int, delta: float) -> NonAdaptiveBound:
    ok = 0.0 < delta < NONADAPTIVE_DELTA_MAX
    lb_any = H * math.log(n / (25.0 * delta))
    lb_worst = H * n / 2.0 * math.log(1.0 / (24.0 * delta))
    return NonAdaptiveBound(lb_any, lb_worst, ok)


def alpha_lb(n: int, alpha: float, delta: float) -> float:
    """Non-adaptive lower bound for the alpha-parameterized family."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return n * math.log(n / (25.0 * delta))
    return n ** (2 * alpha + 1) * math.log(1.0 / (24.0 * delta))


def norm_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)`` of the standard normal, via libm erfc."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def error_lb_exact(g: Sequence[float], m: int) -> float:
    """Lower bound on the error of any equal-allocation procedure, unit-variance Gaussian arms.

    Returns ``0.5 * (1 - prod_i Phi(sqrt(m) * gap_i))``.  The product is
    accumulated in log space so that values far below machine epsilon of 1
    keep their relative accuracy.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    root_m = math.sqrt(m)
    log_prod = math.fsum(math.log1p(-norm_sf(root_m * float(d))) for d in g)
    return -0.5 * math.expm1(log_prod)


@dataclass
class SliceResult:
    slices: dict[int, list[int]]
    s_star: int
    L_pred: int

    def counts(self) -> dict[int, int]:
        return {s: len(v) for s, v in sorted(self.slices.items())}


def slice_index(gap: float, log_inv_delta: float) -> int:
    """Slice s with ``5*sqrt(2)*eps_{s+1} < gap <= 5*sqrt(2)*eps_s``; 0 for gaps above slice 1.

    With ``eps_s**2 = L / 2**s`` the condition is ``2**s <= 50 L / gap**2 < 2**(s+1)``.
    """
    # gaps within rounding of a boundary count as on it (right-closed side)
    x = 50.0 * log_inv_delta / gap ** 2 * (1.0 + 1e-12)
    if x < 2.0:
        return 0
    s = int(math.floor(math.log2(x)))
    while 2.0 ** s > x:
        s -= 1
    while 2.0 ** (s + 1) <= x:
        s += 1
    return s


def slice_arms(g: Sequence[float], delta: float) -> SliceResult:
    """Partition ranks 1..n by gap magnitude; also the predicted slice/phase counts."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    g = _check_positive(g)
    L = math.log(1.0 / delta)
    slices: dict[int, list[int]] = {}
    for rank, d in enumerate(g, start=1):
        slices.setdefault(slice_index(float(d), L), []).append(rank)
    dmin = float(g.min())
    H = hardness_H(g)
    s_star = math.ceil(math.log2(L / dmin ** 2))
    L_pred = math.log2(2 * L) + max(math.log2(dmin ** -2), math.log2(50 ** 2 * H * dmin ** 2))
    return SliceResult(slices, s_star, math.ceil(L_pred))


@dataclass
class TheoryBounds:
    H: float
    G: float | None
    adaptive_lb: float
    adaptive_lb_in_range: bool
    nonadaptive_lb_any: float
    nonadaptive_lb_worst: float
    nonadaptive_in_range: bool
    alpha_lb: float | None
    slices: dict[int, list[int]] = field(default_factory=dict)
    s_star: int = 0
    L_pred: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["slices"] = {str(s): v for s, v in sorted(self.slices.items())}
        return d


def theory_bounds(
    instance: BanditInstance, delta: float, c1: float = 1.0, alpha: float | None = None
) -> TheoryBounds:
    g = gaps(instance)
    H = hardness_H(g)
    G = hardness_G(g) if np.all(g <= 1.0) else None
    ad = adaptive_lb(H, delta, c1)
    na = nonadaptive_lb(H, instance.n, delta)
    sl = slice_arms(g, delta)
    return TheoryBounds(
        H=H,
        G=G,
        adaptive_lb=ad.value,
        adaptive_lb_in_range=ad.in_range,
        nonadaptive_lb_any=na.lb_any,
        nonadaptive_lb_worst=na.lb_worst,
        nonadaptive_in_range=na.in_range,
        alpha_lb=None if alpha is None else alpha_lb(instance.n, alpha, delta),
        slices=sl.slices,
        s_star=sl.s_star,
        L_pred=sl.L_pred,
    )
