"""Point-evaluation functionals on jets and their evaluation matrices.

The functional ``(p, j, v, s)`` reads output coordinate ``s`` of the
order-``j`` form at point ``p`` applied to the basis element ``v``. Because
every jet table is laid out as ``(point, slot, out_coord)`` with slots in
canonical ``(order, lex multi-index)`` order, the canonical functional order
is exactly the row-major flattening of that table. A functional's row index
in ``sigma_star(domain, q)`` is therefore
``(p * dim_D(d, q) + slot) * c + s``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .combinatorics import MultiIndex, dim_D, order_offsets, ordered_position, slot_keys
from .errors import EmptySetError, IncompatibleError, OrderRangeError
from .jets import Domain, JetFunction


@dataclass(frozen=True, order=True)
class FunctionalId:
    point: int
    order: int
    basis: MultiIndex
    out_coord: int  # 1-based, like the basis letters

    def __post_init__(self):
        if len(self.basis) != self.order:
            raise IncompatibleError(f"basis {self.basis} does not have order {self.order}")


class FunctionalSet:
    """An ordered list of functionals sharing a domain, ``d``, ``c`` and level.

    Internally it is a list of flat slot offsets into the per-jet table
    ``values.reshape(-1)`` of a jet with ``k >= level``; ``k`` fixes the
    table stride.
    """

    def __init__(self, domain: Domain, c: int, level: int, points: Sequence[int]):
        self.domain = domain
        self.c = c
        self.level = level
        self.points = tuple(int(p) for p in points)
        self._ids: list[FunctionalId] | None = None

    def __len__(self) -> int:
        return len(self.points) * self.c * dim_D(self.domain.d, self.level)

    @property
    def ids(self) -> list[FunctionalId]:
        if self._ids is None:
            keys = slot_keys(self.domain.d, self.level)
            self._ids = [
                FunctionalId(p, j, m, s + 1)
                for p in self.points
                for j, m in keys
                for s in range(self.c)
            ]
        return self._ids

    def __iter__(self):
        return iter(self.ids)

    def __getitem__(self, i: int) -> FunctionalId:
        return self.ids[i]

    def rows(self, k: int) -> np.ndarray:
        """Flat offsets into ``values.reshape(-1)`` for a jet with order ``k``."""
        if self.level > k:
            raise OrderRangeError(f"level {self.level} exceeds jet order {k}")
        width = dim_D(self.domain.d, self.level) * self.c
        stride = dim_D(self.domain.d, k) * self.c
        pts = np.asarray(self.points, dtype=np.intp)
        return (pts[:, None] * stride + np.arange(width)[None, :]).reshape(-1)


def tau(domain: Domain, c: int, p: int, l: int) -> FunctionalSet:
    """All functionals at ``p`` up to order ``l``."""
    if l < 0:
        raise OrderRangeError(f"level must be >= 0, got {l}")
    if not 0 <= p < domain.size:
        raise IncompatibleError(f"point {p} outside domain of size {domain.size}")
    return FunctionalSet(domain, c, l, [p])


def sigma_star(domain: Domain, c: int, q: int) -> FunctionalSet:
    """All functionals at every point up to order ``q``."""
    if q < 0:
        raise OrderRangeError(f"level must be >= 0, got {q}")
    return FunctionalSet(domain, c, q, range(domain.size))


def _check(sigma: FunctionalId, F: JetFunction) -> None:
    if not 0 <= sigma.point < F.domain.size:
        raise IncompatibleError(f"functional point {sigma.point} outside the jet's domain")
    if not 0 <= sigma.order <= F.k:
        raise IncompatibleError(f"functional order {sigma.order} exceeds jet order {F.k}")
    if not 1 <= sigma.out_coord <= F.c:
        raise IncompatibleError(f"functional output coordinate {sigma.out_coord} outside 1..{F.c}")
    if sigma.basis not in ordered_position(F.d, sigma.order):
        raise IncompatibleError(f"basis {sigma.basis} is not an ordered index over d={F.d}")


def eval_functional(sigma: FunctionalId, F: JetFunction) -> float:
    _check(sigma, F)
    slot = order_offsets(F.d, F.k)[sigma.order] + ordered_position(F.d, sigma.order)[sigma.basis]
    return float(F.values[sigma.point, slot, sigma.out_coord - 1])


def _check_set(L: FunctionalSet, F: JetFunction) -> None:
    if L.domain != F.domain or L.c != F.c:
        raise IncompatibleError("functional set and jet disagree on domain or c")
    if L.level > F.k:
        raise IncompatibleError(f"functional level {L.level} exceeds jet order {F.k}")


def eval_vector(F: JetFunction, L: FunctionalSet) -> np.ndarray:
    """``[sigma(F) for sigma in L]`` without materialising the ids."""
    _check_set(L, F)
    return F.values.reshape(-1)[L.rows(F.k)]


def eval_matrix(features: Sequence[JetFunction], L: FunctionalSet) -> np.ndarray:
    """Matrix with entry ``(r, i) = L[r](features[i])``."""
    if len(features) == 0:
        return np.zeros((len(L), 0))
    rows = None
    out = np.empty((len(L), len(features)))
    for i, F in enumerate(features):
        _check_set(L, F)
        if rows is None:
            rows = L.rows(F.k)
        out[:, i] = F.values.reshape(-1)[rows]
    return out


def _argmax_abs(values: np.ndarray, L: FunctionalSet) -> tuple[float, FunctionalId]:
    if len(values) == 0:
        raise EmptySetError("max over an empty functional set")
    # np.argmax returns the first maximiser, which is the canonical tie-break.
    i = int(np.argmax(np.abs(values)))
    return float(abs(values[i])), L[i]


def max_abs_residual(phi: JetFunction, u: JetFunction, L: FunctionalSet) -> tuple[float, FunctionalId]:
    """Largest ``|sigma(phi - u)|`` over ``L`` and the first functional attaining it."""
    if not phi.compatible_with(u):
        raise IncompatibleError("phi and u must share domain, gamma and c")
    return _argmax_abs(eval_vector(phi, L) - eval_vector(u, L), L)
