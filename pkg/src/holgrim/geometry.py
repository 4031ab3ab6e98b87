"""Threshold radii, plus packings and covers of point sets.

The threshold solvers invert maps of the form
``lam -> 2 K lam**e + eps0 exp(lam)``, which increase strictly in ``lam``
for ``e > 0``; the supremum of the feasible set is found by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParameterRangeError
from .jets import Domain

EXACT_PACKING_MAX = 20
COVER_MAX_DIM = 6
COVER_MAX_POINTS = 10**6
_EXP_CAP = 700.0


@dataclass(frozen=True)
class ThresholdQuery:
    C: float
    gamma: float
    epsilon: float
    epsilon0: float
    c: int = 1
    d: int = 1
    q: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ParameterRangeError(f"C must be positive, got {self.C}")
        if not self.gamma > self.q:
            raise ParameterRangeError(f"need gamma > q, got gamma={self.gamma}, q={self.q}")
        if self.c < 1 or self.d < 1 or self.q < 0:
            raise ParameterRangeError(f"need c, d >= 1 and q >= 0, got c={self.c}, d={self.d}, q={self.q}")
        if not 0 <= self.epsilon0 < self.bound:
            raise ParameterRangeError(
                f"need 0 <= epsilon0 < epsilon/(c d^q) = {self.bound!r}, got {self.epsilon0!r}"
            )

    @property
    def bound(self) -> float:
        return self.epsilon / (self.c * self.d ** self.q)

    def lhs(self, lam: float) -> float:
        return _threshold_map(lam, self.C, self.gamma - self.q, self.epsilon0)


def _threshold_map(lam: float, K: float, expo: float, eps0: float) -> float:
    growth = eps0 * math.exp(min(lam, _EXP_CAP)) if eps0 > 0 else 0.0
    return 2.0 * K * lam**expo + growth


def _bisect_sup(K: float, expo: float, eps0: float, target: float, rtol: float = 1e-12) -> float:
    """``sup {lam > 0 : 2 K lam**expo + eps0 e**lam <= target}``."""
    assert eps0 < target, "threshold infeasible for every lam"
    lo, hi = 0.0, 1.0
    while _threshold_map(hi, K, expo, eps0) <= target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # bracket down to adjacent doubles; happens when the root underflows
            break
        if _threshold_map(mid, K, expo, eps0) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def solve_r(query: ThresholdQuery) -> float:
    """Separation radius ``r`` for the given budget and accuracy.

    Returns 0.0 when the radius is below the smallest positive double
    (``gamma`` barely above ``q``).
    """
    return _bisect_sup(query.C, query.gamma - query.q, query.epsilon0, query.bound)


def closed_form_r(query: ThresholdQuery) -> float:
    """``(eps / (2 C c d^q))**(1/(gamma - q))``, exact only when ``epsilon0 == 0``."""
    return (query.bound / (2.0 * query.C)) ** (1.0 / (query.gamma - query.q))


def sandwich_radius(K0: float, gamma: float, epsilon: float, epsilon0: float, l: int) -> float:
    """Radius ``theta in (0, 1]`` with ``2 K0 theta**(gamma-l) + eps0 e**theta <= eps``."""
    if not 0 <= epsilon0 < epsilon <= K0:
        raise ParameterRangeError(
            f"need 0 <= epsilon0 < epsilon <= K0, got epsilon0={epsilon0}, epsilon={epsilon}, K0={K0}"
        )
    if not gamma > l >= 0:
        raise ParameterRangeError(f"need gamma > l >= 0, got gamma={gamma}, l={l}")
    return min(_bisect_sup(K0, gamma - l, epsilon0, epsilon), 1.0)


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def greedy_packing(domain: Domain, r: float) -> list[int]:
    """Maximal ``r``-separated subset, scanning points in order."""
    if not r > 0:
        raise ParameterRangeError(f"r must be positive, got {r}")
    pts = domain.points
    kept: list[int] = []
    for i in range(domain.size):
        if not kept or np.min(np.linalg.norm(pts[kept] - pts[i], axis=1)) > r:
            kept.append(i)
    return kept


def exact_packing(domain: Domain, r: float) -> int:
    """Size of a largest ``r``-separated subset (branch and bound)."""
    if not r > 0:
        raise ParameterRangeError(f"r must be positive, got {r}")
    size = domain.size
    if size > EXACT_PACKING_MAX:
        raise ParameterRangeError(f"exact packing limited to {EXACT_PACKING_MAX} points, got {size}")
    conflict = _pairwise(domain.points) <= r
    np.fill_diagonal(conflict, False)
    masks = [sum(1 << int(j) for j in np.flatnonzero(conflict[i])) for i in range(size)]
    best = 0

    def search(cand: int, chosen: int) -> None:
        nonlocal best
        if chosen + bin(cand).count("1") <= best:
            return
        if cand == 0:
            best = chosen
            return
        i = (cand & -cand).bit_length() - 1
        rest = cand & ~(1 << i)
        search(rest & ~masks[i], chosen + 1)
        search(rest, chosen)

    search((1 << size) - 1, 0)
    return best


def grid_cover(d: int, delta: float) -> Domain:
    """Cell centres of a uniform grid whose cells fit in closed ``delta``-balls.

    The per-axis count is ``ceil(sqrt(d) / (2 delta))``; cells have side
    ``1/count <= 2 delta / sqrt(d)``, so each half-diagonal is at most
    ``delta``.
    """
    if not 1 <= d <= COVER_MAX_DIM:
        raise ParameterRangeError(f"grid cover needs 1 <= d <= {COVER_MAX_DIM}, got {d}")
    if not delta > 0:
        raise ParameterRangeError(f"delta must be positive, got {delta}")
    m = math.ceil(math.sqrt(d) / (2.0 * delta))
    if float(m) ** d > COVER_MAX_POINTS:
        raise ParameterRangeError(f"grid cover would have {m}^{d} points, above {COVER_MAX_POINTS}")
    axis = (np.arange(m) + 0.5) / m
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    assert math.sqrt(d) / (2 * m) <= delta * (1 + 1e-12)
    return Domain(pts)


def unit_ball_volume(d: int) -> float:
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1))


def volumetric_bound(d: int, rho: float) -> float:
    """Volume-comparison upper bound on ``rho``-packings of ``[0, 1]^d``."""
    if d < 1:
        raise ParameterRangeError(f"d must be >= 1, got {d}")
    if not 0 < rho < 1:
        raise ParameterRangeError(f"rho must lie in (0, 1), got {rho}")
    return 2.0**d / unit_ball_volume(d) * (1.0 + 1.0 / rho) ** d
