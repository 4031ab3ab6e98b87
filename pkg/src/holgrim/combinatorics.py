"""Counting and enumeration of ordered tensor-basis multi-indices.

A multi-index of order ``j`` over the alphabet ``{1, ..., d}`` is a
nondecreasing tuple ``(l_1, ..., l_j)``. It names the basis element
``v_{l_1} (x) ... (x) v_{l_j}`` of ``V^{(x) j}``; a symmetric ``j``-linear
form is fully determined by its values on these elements. The empty tuple
names the scalar slot ``V^{(x) 0} = R``.

Indices are 1-based throughout the public API.
"""
from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache
from itertools import combinations_with_replacement, product

import numpy as np

from .errors import ParameterRangeError

MAX_DIM = 16
MAX_ORDER = 8

MultiIndex = tuple


def _guard(a: int, b: int) -> None:
    if a < 1 or b < 0:
        raise ParameterRangeError(f"need a >= 1 and b >= 0, got a={a}, b={b}")
    if a > MAX_DIM or b > MAX_ORDER:
        raise ParameterRangeError(
            f"a={a}, b={b} outside guarded range a <= {MAX_DIM}, b <= {MAX_ORDER}"
        )


def beta(a: int, b: int) -> int:
    """Number of nondecreasing ``b``-tuples over ``a`` letters, ``C(a+b-1, b)``."""
    _guard(a, b)
    return math.comb(a + b - 1, b)


def dim_D(d: int, k: int) -> int:
    """Number of ordered basis slots of orders ``0..k``: ``sum_l beta(d, l)``."""
    _guard(d, k)
    return sum(beta(d, l) for l in range(k + 1))


def q_count(m: int, c: int, d: int, k: int) -> int:
    """Carathéodory support size ``1 + m c D(d, k)`` for ``m`` points."""
    if m < 1 or c < 1:
        raise ParameterRangeError(f"need m >= 1 and c >= 1, got m={m}, c={c}")
    return 1 + m * c * dim_D(d, k)


@lru_cache(maxsize=None)
def enum_ordered(d: int, j: int) -> tuple[MultiIndex, ...]:
    """All nondecreasing ``j``-tuples over ``{1..d}`` in lexicographic order."""
    _guard(d, j)
    return tuple(combinations_with_replacement(range(1, d + 1), j))


def multiplicity(m: MultiIndex) -> int:
    """Number of distinct permutations of ``m``."""
    out = math.factorial(len(m))
    for count in Counter(m).values():
        out //= math.factorial(count)
    return out


def is_ordered(m: MultiIndex, d: int | None = None) -> bool:
    if any(m[i] > m[i + 1] for i in range(len(m) - 1)):
        return False
    if d is not None and any(x < 1 or x > d for x in m):
        return False
    return True


@lru_cache(maxsize=None)
def slot_keys(d: int, k: int) -> tuple[tuple[int, MultiIndex], ...]:
    """Canonical ``(order, multi-index)`` slot list for orders ``0..k``.

    This is the per-point layout of every jet table: orders ascend, and
    within an order the multi-indices are lexicographic.
    """
    return tuple((j, m) for j in range(k + 1) for m in enum_ordered(d, j))


@lru_cache(maxsize=None)
def order_offsets(d: int, k: int) -> tuple[int, ...]:
    """Start offset of each order inside the slot list, plus the total."""
    offsets = [0]
    for j in range(k + 1):
        offsets.append(offsets[-1] + beta(d, j))
    return tuple(offsets)


@lru_cache(maxsize=None)
def ordered_position(d: int, j: int) -> dict[MultiIndex, int]:
    return {m: i for i, m in enumerate(enum_ordered(d, j))}


@lru_cache(maxsize=None)
def expansion_map(d: int, j: int) -> np.ndarray:
    """For each of the ``d**j`` full-grid slots (row-major), the position of
    its sorted multi-index in ``enum_ordered(d, j)``."""
    if d ** j > 16 ** 8:
        raise ParameterRangeError(f"d**j = {d ** j} too large to expand")
    pos = ordered_position(d, j)
    out = np.empty(d ** j, dtype=np.intp)
    for flat, tup in enumerate(product(range(1, d + 1), repeat=j)):
        out[flat] = pos[tuple(sorted(tup))]
    out.setflags(write=False)
    return out
