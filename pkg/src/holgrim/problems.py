"""Synthetic feature families with closed-form jets.

Two families are available: gaussian bumps and monomials. Each feature
knows its exact derivative table at arbitrary points (:meth:`tables`) and a
Lip-norm over-bound on a box, so generated problems can be probed off the
finite domain they were restricted to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermeval

from .algorithm import Problem
from .combinatorics import dim_D, expansion_map, multiplicity, order_offsets, slot_keys
from .errors import ParameterRangeError, UnsupportedError, ValidationError
from .geometry import grid_cover
from .jets import Domain, JetFunction, _opnorm_batch, k_of_gamma, lip_norms

MAX_GEN_ORDER = 2


def _counts(m, d: int) -> np.ndarray:
    t = np.zeros(d, dtype=int)
    for idx in m:
        t[idx - 1] += 1
    return t


def _falling(a: int, t: int) -> float:
    return float(math.perm(a, t)) if t <= a else 0.0


@dataclass
class Gaussian:
    """``x -> exp(-|x - center|^2 / (2 width^2)) * direction``."""

    center: np.ndarray
    width: float
    direction: np.ndarray

    def scalar_table(self, points: np.ndarray, k: int) -> np.ndarray:
        d = points.shape[1]
        u = (points - self.center) / self.width
        g = np.exp(-0.5 * np.sum(u * u, axis=1))
        out = np.empty((len(points), dim_D(d, k)))
        for slot, (j, m) in enumerate(slot_keys(d, k)):
            val = g * (-1.0 / self.width) ** j
            for i, t in enumerate(_counts(m, d)):
                if t:
                    val = val * hermeval(u[:, i], [0] * t + [1])
            out[:, slot] = val
        return out

    def derivative_bounds(self, d: int, orders: int, box=None) -> list[float]:
        """Global sups of the Frobenius norms of derivatives ``0..orders``."""
        s = self.width
        out = [1.0, 1.0 / (s * math.sqrt(math.e)), math.sqrt(d) / s**2]
        if orders >= 3:
            t = np.linspace(0.0, 80.0, 400001)
            f = np.sqrt(np.maximum(t**3 - 6 * t**2 + (3 * d + 6) * t, 0.0)) * np.exp(-t / 2)
            out.append(1.001 * float(f.max()) / s**3)
        if orders > 3:
            raise ParameterRangeError(f"gaussian bounds implemented to order 3, asked for {orders}")
        return out[: orders + 1]


@dataclass
class Monomial:
    """``x -> prod_i x_i**exponents_i * direction``."""

    exponents: np.ndarray
    direction: np.ndarray

    def scalar_table(self, points: np.ndarray, k: int) -> np.ndarray:
        d = points.shape[1]
        out = np.empty((len(points), dim_D(d, k)))
        for slot, (j, m) in enumerate(slot_keys(d, k)):
            t = _counts(m, d)
            coef = math.prod(_falling(int(a), int(b)) for a, b in zip(self.exponents, t))
            if coef == 0.0:
                out[:, slot] = 0.0
                continue
            out[:, slot] = coef * np.prod(points ** (self.exponents - t), axis=1)
        return out

    def derivative_bounds(self, d: int, orders: int, box=None) -> list[float]:
        """Sups over the box ``[lo, hi]`` of the Frobenius norms of derivatives."""
        lo, hi = (np.zeros(d), np.ones(d)) if box is None else box
        R = np.maximum(np.abs(lo), np.abs(hi))
        out = []
        for j in range(orders + 1):
            total = 0.0
            for jj, m in slot_keys(d, j):
                if jj != j:
                    continue
                t = _counts(m, d)
                coef = math.prod(_falling(int(a), int(b)) for a, b in zip(self.exponents, t))
                if coef:
                    total += multiplicity(m) * (coef * float(np.prod(R ** (self.exponents - t)))) ** 2
            out.append(math.sqrt(total))
        return out


def feature_tables(features: Sequence, points: np.ndarray, k: int) -> np.ndarray:
    """Exact jet tables, shape ``(n, len(points), dim_D(d, k), c)``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.stack([f.scalar_table(points, k)[:, :, None] * f.direction for f in features])


def analytic_lip_bound(feature, d: int, gamma: float, box=None) -> float:
    """Lip(gamma) over-bound on a convex box from derivative sups.

    The bound terms are the sups of orders ``0..k``; the remainder of order
    ``l`` is controlled by the order ``k+1`` sup times
    ``|y - x|**(k + 1 - l) / (k + 1 - l)!``, which is at most
    ``B_{k+1} * max(1, diam)**(k + 1 - gamma) * |y - x|**(gamma - l)``.
    """
    k = k_of_gamma(gamma)
    lo, hi = (np.zeros(d), np.ones(d)) if box is None else box
    diam = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
    B = feature.derivative_bounds(d, k + 1, (np.asarray(lo), np.asarray(hi)))
    return max(max(B[: k + 1]), B[k + 1] * max(1.0, diam) ** (k + 1 - gamma))


@dataclass
class AnalyticFamily:
    features: list
    box: tuple

    def tables(self, points: np.ndarray, k: int) -> np.ndarray:
        return feature_tables(self.features, points, k)


@dataclass
class GeneratorSpec:
    """Recipe for a synthetic problem.

    The domain is ``points`` when given, else ``grid_cover(d, cover_delta)``
    when ``cover_delta`` is set, else ``size`` uniform points in the unit
    cube. ``scaling`` is ``"lip"`` (exact Lip norm on the domain) or
    ``"analytic"`` (over-bound on the unit cube).
    """

    kind: str = "gaussian"
    n: int = 100
    d: int = 2
    c: int = 1
    gamma: float = 2.0
    size: int = 50
    points: np.ndarray | None = None
    cover_delta: float | None = None
    width_range: tuple = (0.15, 0.4)
    center_range: tuple = (0.0, 1.0)
    degree: int = 3
    coefficients: str = "signed"
    coef_range: tuple = (0.1, 1.0)
    scaling: str = "lip"
    seed: int = 0
    validate: bool = True  # re-check analytic scalings against exact Lip norms

    def __post_init__(self):
        if self.kind not in ("gaussian", "polynomial"):
            raise ParameterRangeError(f"unknown feature kind {self.kind!r}")
        if self.coefficients not in ("signed", "positive"):
            raise ParameterRangeError(f"unknown coefficient law {self.coefficients!r}")
        if self.scaling not in ("lip", "analytic"):
            raise ParameterRangeError(f"unknown scaling rule {self.scaling!r}")
        if self.n < 1 or self.d < 1 or self.c < 1:
            raise ParameterRangeError("n, d and c must be positive")
        if k_of_gamma(self.gamma) > MAX_GEN_ORDER:
            raise ParameterRangeError(
                f"generators support k <= {MAX_GEN_ORDER}, gamma={self.gamma} gives k={k_of_gamma(self.gamma)}"
            )
        lo, hi = self.coef_range
        if not 0 < lo <= hi:
            raise ParameterRangeError(f"coefficient magnitudes must satisfy 0 < lo <= hi, got {self.coef_range}")


def _unit_vectors(rng, n: int, c: int) -> np.ndarray:
    if c == 1:
        return np.ones((n, 1))
    v = rng.standard_normal((n, c))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _make_domain(spec: GeneratorSpec, rng) -> Domain:
    if spec.points is not None:
        dom = Domain(spec.points)
        if dom.d != spec.d:
            raise ValidationError("domain-dimension", f"points have d={dom.d}, spec says d={spec.d}")
        return dom
    if spec.cover_delta is not None:
        return grid_cover(spec.d, spec.cover_delta)
    return Domain(rng.random((spec.size, spec.d)))


def _make_features(spec: GeneratorSpec, rng) -> list:
    dirs = _unit_vectors(rng, spec.n, spec.c)
    if spec.kind == "gaussian":
        lo, hi = spec.center_range
        centers = lo + (hi - lo) * rng.random((spec.n, spec.d))
        widths = rng.uniform(*spec.width_range, size=spec.n)
        return [Gaussian(centers[i], float(widths[i]), dirs[i]) for i in range(spec.n)]
    feats = []
    for i in range(spec.n):
        total = int(rng.integers(0, spec.degree + 1))
        # spread the total degree over the coordinates
        exps = np.bincount(rng.integers(0, spec.d, size=total), minlength=spec.d)
        feats.append(Monomial(exps.astype(int), dirs[i]))
    return feats


def gen_problem(spec: GeneratorSpec) -> Problem:
    rng = np.random.default_rng(spec.seed)
    domain = _make_domain(spec, rng)
    feats = _make_features(spec, rng)
    k = k_of_gamma(spec.gamma)
    tables = feature_tables(feats, domain.points, k)
    jets = [JetFunction(domain, spec.gamma, t) for t in tables]
    mags = rng.uniform(*spec.coef_range, size=spec.n)
    if spec.coefficients == "signed":
        mags = mags * rng.choice([-1.0, 1.0], size=spec.n)
    box = (np.zeros(spec.d), np.ones(spec.d))
    if spec.scaling == "analytic":
        lo = np.minimum(box[0], domain.points.min(axis=0))
        hi = np.maximum(box[1], domain.points.max(axis=0))
        box = (lo, hi)
        A = np.array([analytic_lip_bound(f, spec.d, spec.gamma, box) for f in feats])
        return Problem(domain, jets, mags, A, analytic=AnalyticFamily(feats, box), validate=spec.validate)
    A = lip_norms(jets)
    # a feature vanishing on the whole domain still needs a positive scale
    A = np.where(A > 0, A, 1.0)
    return Problem(domain, jets, mags, A, analytic=AnalyticFamily(feats, box), validate=False)


def lambda_tables(tables: np.ndarray, d: int, k: int, q: int) -> np.ndarray:
    """Per-point ``Lambda^q`` of jet tables shaped ``(P, dim_D(d, k), c)``."""
    off = order_offsets(d, k)
    norms = []
    for j in range(q + 1):
        block = tables[:, off[j]:off[j + 1]][:, expansion_map(d, j)]
        norms.append(_opnorm_batch(np.swapaxes(block, -1, -2)))
    return np.max(norms, axis=0)


def probe_error(problem: Problem, u_coefficients, probes, q: int, chunk: int = 4096) -> float:
    """``max_z Lambda^q(phi - u)(z)`` over probe points, from analytic jets."""
    if problem.analytic is None:
        raise UnsupportedError("probe_error needs a generator-built problem")
    u = np.asarray(u_coefficients, dtype=float)
    if u.shape != (problem.n,):
        raise ValidationError("coefficient-shape", f"need {problem.n} coefficients, got {u.shape}")
    if not 0 <= q <= problem.k:
        raise ValidationError("order-level", f"q={q} outside 0..{problem.k}")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    diff = problem.a - u
    idx = np.flatnonzero(diff)
    if len(idx) == 0 or len(probes) == 0:
        return 0.0
    feats = [problem.analytic.features[i] for i in idx]
    best = 0.0
    for start in range(0, len(probes), chunk):
        pts = probes[start:start + chunk]
        tab = np.einsum("i,ipsc->psc", diff[idx], feature_tables(feats, pts, problem.k))
        best = max(best, float(lambda_tables(tab, problem.d, problem.k, q).max()))
    return best
