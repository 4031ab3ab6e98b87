"""Lip(gamma) jets on a finite point cloud.

A jet ``psi = (psi^(0), ..., psi^(k))`` assigns to every point of the domain
a symmetric ``j``-linear form ``V^(x)j -> R^c`` for each order ``j <= k``.
Only the ordered-basis coefficients are stored. Per point the table has
``dim_D(d, k)`` slots in the canonical order of
:func:`holgrim.combinatorics.slot_keys`, each slot holding ``c`` reals.

Tensor powers of ``R^d`` carry the inner-product crossnorm, so the operator
norm of an order-``j`` form is the spectral norm of its ``c x d**j``
full-grid matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import (
    MultiIndex,
    beta,
    dim_D,
    enum_ordered,
    expansion_map,
    is_ordered,
    order_offsets,
    ordered_position,
)
from .errors import IncompatibleError, OrderRangeError, ValidationError


def k_of_gamma(gamma: float) -> int:
    """Smallest integer ``k >= 0`` with ``gamma <= k + 1``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return max(int(math.ceil(gamma)) - 1, 0)


class Domain:
    """A finite set of distinct points in ``R^d``."""

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValidationError("domain-shape", f"need a (size, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("domain-finite", "domain contains non-finite coordinates")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValidationError("distinct-points", "domain points must be distinct")
        pts.setflags(write=False)
        self.points = pts

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Domain):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return f"Domain(size={self.size}, d={self.d})"


@dataclass(frozen=True)
class SymmetricForm:
    """Ordered-basis coefficients of one symmetric form.

    ``coeffs`` has shape ``(beta(d, order), c)``; row ``i`` is the value on
    the ``i``-th multi-index of ``enum_ordered(d, order)``.
    """

    order: int
    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[None, :] if self.order == 0 else coeffs[:, None]
        if coeffs.shape[0] != beta(self.d, self.order):
            raise IncompatibleError(
                f"order-{self.order} form over d={self.d} needs {beta(self.d, self.order)} "
                f"coefficients, got {coeffs.shape[0]}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def c(self) -> int:
        return self.coeffs.shape[1]

    def __getitem__(self, m: MultiIndex) -> np.ndarray:
        return self.coeffs[ordered_position(self.d, self.order)[tuple(m)]]

    def full(self) -> np.ndarray:
        """The ``c x d**order`` matrix over the full tensor grid."""
        return self.coeffs[expansion_map(self.d, self.order)].T


def operator_norm(form: SymmetricForm) -> float:
    if form.order == 0:
        return float(np.linalg.norm(form.coeffs[0]))
    mat = form.full()
    if mat.shape[0] == 1:
        return float(np.linalg.norm(mat[0]))
    return float(np.linalg.norm(mat, 2))


def _opnorm_batch(mats: np.ndarray) -> np.ndarray:
    """Spectral norms over the last two axes ``(c, d**j)``."""
    if mats.shape[-2] == 1:
        return np.linalg.norm(mats[..., 0, :], axis=-1)
    if mats.shape[-1] == 1:
        return np.linalg.norm(mats[..., 0], axis=-1)
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def _tensor_power(w: np.ndarray, s: int) -> np.ndarray:
    """Row-major flattening of ``w^(x)s`` over the last axis of ``w``."""
    out = np.ones(w.shape[:-1] + (1,))
    for _ in range(s):
        out = (out[..., :, None] * w[..., None, :]).reshape(w.shape[:-1] + (-1,))
    return out


class JetFunction:
    """A jet of regularity ``gamma`` on a finite domain.

    Parameters
    ----------
    domain : Domain
    gamma : float
        Regularity; ``k`` is derived with ``gamma in (k, k+1]``.
    values : array_like, shape (size, dim_D(d, k), c)
        Ordered-basis coefficients, slot layout as in ``slot_keys(d, k)``.
    """

    def __init__(self, domain: Domain, gamma: float, values):
        self.domain = domain
        self.gamma = float(gamma)
        self.k = k_of_gamma(gamma)
        vals = np.array(values, dtype=float)
        expected = (domain.size, dim_D(domain.d, self.k))
        if vals.ndim == 2 and vals.shape == expected:
            vals = vals[:, :, None]
        if vals.ndim != 3 or vals.shape[:2] != expected or vals.shape[2] < 1:
            raise ValidationError(
                "table-shape", f"jet table must have shape {expected + ('c',)}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("table-finite", "jet table contains non-finite values")
        vals.setflags(write=False)
        self.values = vals

    @classmethod
    def zeros(cls, domain: Domain, gamma: float, c: int = 1) -> "JetFunction":
        k = k_of_gamma(gamma)
        return cls(domain, gamma, np.zeros((domain.size, dim_D(domain.d, k), c)))

    @property
    def c(self) -> int:
        return self.values.shape[2]

    @property
    def d(self) -> int:
        return self.domain.d

    def _check_order(self, j: int) -> None:
        if not 0 <= j <= self.k:
            raise OrderRangeError(f"order {j} outside 0..{self.k}")

    def form(self, p: int, j: int) -> SymmetricForm:
        self._check_order(j)
        off = order_offsets(self.d, self.k)
        return SymmetricForm(j, self.d, self.values[p, off[j]:off[j + 1]])

    def full(self, p, j: int) -> np.ndarray:
        """Full-grid forms at point(s) ``p``: shape ``(..., c, d**j)``."""
        self._check_order(j)
        off = order_offsets(self.d, self.k)
        block = self.values[p, off[j]:off[j + 1]] if np.ndim(p) == 0 else self.values[p][:, off[j]:off[j + 1]]
        return np.swapaxes(block[..., expansion_map(self.d, j), :], -1, -2)

    def compatible_with(self, other: "JetFunction") -> bool:
        return (
            self.domain == other.domain
            and self.gamma == other.gamma
            and self.values.shape == other.values.shape
        )

    def __sub__(self, other: "JetFunction") -> "JetFunction":
        return linear_combination([(1.0, self), (-1.0, other)])

    def __add__(self, other: "JetFunction") -> "JetFunction":
        return linear_combination([(1.0, self), (1.0, other)])

    def __mul__(self, scalar: float) -> "JetFunction":
        return linear_combination([(float(scalar), self)])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"JetFunction(size={self.domain.size}, d={self.d}, c={self.c}, gamma={self.gamma})"


def lambda_l(F: JetFunction, p: int, l: int) -> float:
    """Largest operator norm among the orders ``0..l`` at point ``p``."""
    F._check_order(l)
    return max(operator_norm(F.form(p, j)) for j in range(l + 1))


def lambda_all(F: JetFunction, l: int) -> np.ndarray:
    """``lambda_l(F, p, l)`` for every point ``p`` at once."""
    F._check_order(l)
    idx = np.arange(F.domain.size)
    return np.max([_opnorm_batch(F.full(idx, j)) for j in range(l + 1)], axis=0)


def remainder_full(F: JetFunction, j: int, z: int, p: int) -> np.ndarray:
    """Taylor remainder ``R_j(z, p)`` as a ``c x d**j`` full-grid matrix."""
    F._check_order(j)
    d, k, c = F.d, F.k, F.c
    w = F.domain.points[p] - F.domain.points[z]
    out = F.full(p, j).copy()
    for s in range(k - j + 1):
        t = F.full(z, j + s).reshape(c, d ** j, d ** s)
        out -= (t @ _tensor_power(w, s)) / math.factorial(s)
    return out


def remainder(F: JetFunction, j: int, z: int, p: int, v: MultiIndex) -> np.ndarray:
    """``R_j(z, p)[v]`` for a basis element ``v`` of order ``j``."""
    if len(v) != j or not is_ordered(v, F.d):
        raise OrderRangeError(f"multi-index {v} is not an ordered order-{j} index over d={F.d}")
    flat = 0
    for idx in v:
        flat = flat * F.d + (idx - 1)
    return remainder_full(F, j, z, p)[:, flat]


def remainder_form(F: JetFunction, j: int, z: int, p: int) -> SymmetricForm:
    full = remainder_full(F, j, z, p)
    cols = [sum((idx - 1) * F.d ** (j - 1 - pos) for pos, idx in enumerate(m)) for m in enum_ordered(F.d, j)]
    return SymmetricForm(j, F.d, full[:, cols].T)


def lip_norms(jets: Sequence[JetFunction], chunk: int = 64) -> np.ndarray:
    """Exact finite-domain Lip(gamma) norms by exhaustive pair scan.

    The norm is the larger of the bound term (every stored form) and the
    Hölder term ``||R_l(x, y)|| / ||y - x||**(gamma - l)`` over ordered pairs
    ``x != y``. Jets must share a domain and ``gamma``.
    """
    jets = list(jets)
    if not jets:
        return np.zeros(0)
    first = jets[0]
    for F in jets[1:]:
        if not first.compatible_with(F):
            raise IncompatibleError("lip_norms needs jets on a shared domain and gamma")
    dom, d, k, c, gamma = first.domain, first.d, first.k, first.c, first.gamma
    size = dom.size
    off = order_offsets(d, k)
    X = dom.points
    W = X[None, :, :] - X[:, None, :]  # W[x, y] = y - x
    dist = np.linalg.norm(W, axis=-1)
    offdiag = ~np.eye(size, dtype=bool)
    wpow = [_tensor_power(W, s) for s in range(k + 1)]
    out = np.empty(len(jets))
    for start in range(0, len(jets), chunk):
        block = np.stack([F.values for F in jets[start:start + chunk]])  # (b, size, D, c)
        full = [
            np.swapaxes(block[:, :, off[j]:off[j + 1]][:, :, expansion_map(d, j)], -1, -2)
            for j in range(k + 1)
        ]  # full[j]: (b, size, c, d**j)
        best = np.max([_opnorm_batch(fj).max(axis=1) for fj in full], axis=0)
        if size > 1:
            for l in range(k + 1):
                R = np.broadcast_to(full[l][:, None, :, :, :], (block.shape[0], size, size, c, d ** l)).copy()
                for s in range(k - l + 1):
                    t = full[l + s].reshape(block.shape[0], size, c, d ** l, d ** s)
                    R -= np.einsum("bxcas,xys->bxyca", t, wpow[s]) / math.factorial(s)
                norms = _opnorm_batch(R)[:, offdiag]
                quot = norms / dist[offdiag] ** (gamma - l)
                best = np.maximum(best, quot.max(axis=1))
        out[start:start + chunk] = best
    return out


def lip_norm(F: JetFunction) -> float:
    return float(lip_norms([F])[0])


def taylor_proposal(F: JetFunction, x: int, v) -> np.ndarray:
    """Value at ``v`` of the Taylor polynomial of ``F`` based at point ``x``."""
    w = np.asarray(v, dtype=float) - F.domain.points[x]
    out = np.zeros(F.c)
    for s in range(F.k + 1):
        out += F.full(x, s) @ _tensor_power(w, s) / math.factorial(s)
    return out


def linear_combination(terms: Iterable[tuple[float, JetFunction]]) -> JetFunction:
    """Slotwise weighted sum ``sum_i a_i F_i``."""
    terms = list(terms)
    if not terms:
        raise IncompatibleError("linear_combination needs at least one term")
    first = terms[0][1]
    acc = np.zeros_like(first.values)
    for a, F in terms:
        if not first.compatible_with(F):
            raise IncompatibleError("jets in a linear combination must share domain, gamma and c")
        acc += a * F.values
    return JetFunction(first.domain, first.gamma, acc)
