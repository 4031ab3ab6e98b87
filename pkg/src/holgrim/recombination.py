"""Carathéodory recombination of positively weighted feature sets.

Given positive weights ``alpha`` over ``n`` columns and a ``(Q-1) x n``
moment matrix, :func:`reduce` returns nonnegative weights on at most ``Q``
columns with the same weighted moments and the same total weight.

The reduction eliminates one column per kernel direction of the augmented
matrix ``[1; moments]``. Large inputs are handled by repeatedly merging the
active columns into ``2Q`` blocks, reducing the block aggregates and
rescaling the surviving blocks, which costs ``O(nQ + Q^3 log(n/Q))``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import IncompatibleError
from .jets import JetFunction, linear_combination

if TYPE_CHECKING:
    from .algorithm import Problem

KERNEL_RTOL = 1e-10
FLOOR_RTOL = 1e-10


@dataclass
class ReductionInput:
    weights: np.ndarray
    moments: np.ndarray
    tolerance: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        moments = np.asarray(self.moments, dtype=float)
        if moments.ndim == 1:
            moments = moments[None, :]
        if moments.size == 0:
            moments = moments.reshape(0, len(self.weights))
        self.moments = moments
        if self.weights.ndim != 1 or len(self.weights) < 1:
            raise IncompatibleError("weights must be a nonempty vector")
        if self.moments.shape[1] != len(self.weights):
            raise IncompatibleError(
                f"moments have {self.moments.shape[1]} columns for {len(self.weights)} weights"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.moments))):
            raise IncompatibleError("weights and moments must be finite")
        if np.any(self.weights <= 0):
            raise IncompatibleError("weights must be strictly positive")
        if self.tolerance < 0:
            raise IncompatibleError("tolerance must be nonnegative")

    @property
    def Q(self) -> int:
        return self.moments.shape[0] + 1


@dataclass
class ReductionOutput:
    support: np.ndarray
    weights: np.ndarray
    achieved_residual: float
    weight_sum_error: float
    floor: float
    exceeded: bool = False

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.support] = self.weights
        return out


def _kernel(X: np.ndarray) -> np.ndarray:
    """Rows spanning the numerical kernel of ``X``, least singular value first."""
    _, S, Vt = np.linalg.svd(X, full_matrices=True)
    smax = S[0] if len(S) else 0.0
    rank = int(np.sum(S > KERNEL_RTOL * smax)) if smax > 0 else 0
    return Vt[rank:][::-1].copy()


def _caratheodory(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Eliminate columns of ``X`` along its kernel, keeping ``X @ w`` fixed.

    ``X`` must carry a row of ones so each kernel direction sums to zero.
    Returns the new weights; eliminated columns hold exactly zero.
    """
    w = w.copy()
    kernel = _kernel(X)
    alive = np.ones(len(w), dtype=bool)
    for i in range(len(kernel)):
        e = kernel[i]
        e[~alive] = 0.0
        big = int(np.argmax(np.abs(e)))
        if abs(e[big]) <= 1e-14:
            continue
        if e[big] < 0:
            e = -e
        pos = np.flatnonzero(e > 0)
        ratios = w[pos] / e[pos]
        pivot = pos[int(np.argmin(ratios))]
        t = w[pivot] / e[pivot]
        w -= t * e
        w[pivot] = 0.0
        alive[pivot] = False
        np.maximum(w, 0.0, out=w)
        w[~alive] = 0.0
        rest = kernel[i + 1:]
        if len(rest):
            rest -= np.outer(rest[:, pivot] / e[pivot], e)
            rest[:, pivot] = 0.0
    return w


def _polish(X: np.ndarray, target: np.ndarray, support: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One step of least-squares refinement on the final support."""
    Xs = X[:, support]
    resid = target - Xs @ w
    step, *_ = np.linalg.lstsq(Xs, resid, rcond=None)
    cand = w + step
    if np.all(cand > 0) and np.max(np.abs(target - Xs @ cand)) < np.max(np.abs(resid)):
        return cand
    return w


def reduce(inp: ReductionInput) -> ReductionOutput:
    """Reduce ``inp.weights`` to a support of at most ``inp.Q`` columns.

    The returned ``floor`` is ``max(tolerance, 1e-10 (1 + ||moments @ w||_inf))``;
    ``exceeded`` flags an achieved residual above it. The caller decides what
    to do about an exceeded report.
    """
    alpha = inp.weights
    n, Q = len(alpha), inp.Q
    target_moments = inp.moments @ alpha
    floor = max(inp.tolerance, FLOOR_RTOL * (1.0 + float(np.max(np.abs(target_moments), initial=0.0))))
    if n <= Q:
        return ReductionOutput(np.arange(n), alpha.copy(), 0.0, 0.0, floor)

    X = np.vstack([np.ones((1, n)), inp.moments])
    target = np.concatenate([[alpha.sum()], target_moments])
    w = alpha.copy()
    active = np.arange(n)
    while len(active) > Q:
        if len(active) <= 2 * Q:
            w[active] = _caratheodory(X[:, active], w[active])
        else:
            # contiguous blocks of the active list, as in np.array_split
            sizes = np.full(2 * Q, len(active) // (2 * Q))
            sizes[: len(active) % (2 * Q)] += 1
            starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
            wa = w[active]
            bw = np.add.reduceat(wa, starts)
            means = np.add.reduceat(X[:, active] * wa, starts, axis=1) / bw
            new_bw = _caratheodory(means, bw)
            w[active] = wa * np.repeat(new_bw / bw, sizes)
        nxt = active[w[active] > 0]
        if len(nxt) == len(active):
            # no kernel direction could be used; the columns are independent
            break
        active = nxt

    support = active
    weights = _polish(X, target, support, w[support])
    achieved = float(np.max(np.abs(inp.moments[:, support] @ weights - target_moments), initial=0.0))
    sum_err = float(abs(weights.sum() - alpha.sum()))
    return ReductionOutput(support, weights, achieved, sum_err, floor, exceeded=achieved > floor)


@dataclass
class StepReduction:
    """Outcome of one recombination step across its shuffles."""

    u: JetFunction
    output: ReductionOutput
    chosen_shuffle: int
    scores: list[float]
    seeds: list[int]
    weights: np.ndarray  # dense normalized weights b over all features
    timings: dict = field(default_factory=dict)

    @property
    def score(self) -> float:
        return self.scores[self.chosen_shuffle]


def shuffle_seed(rng_seed: int, step: int, shuffle: int) -> int:
    return rng_seed + step + shuffle


def recombination_step(
    P: Sequence[int],
    problem: "Problem",
    s: int,
    q: int,
    eps0: float,
    rng_seed: int = 0,
    step: int = 0,
) -> StepReduction:
    """Recombine ``problem``'s target so it interpolates at the points ``P``.

    The rows of ``L(k) = union of tau(z, k), z in P`` are shuffled ``s`` times
    with seeds ``rng_seed + step + j``; each shuffle is reduced with tolerance
    ``eps0 / (c d**k)`` and scored by ``max |sigma(phi - u_j)|`` over
    ``sigma_star(q)``. The lowest score wins, first shuffle on ties.
    """
    if len(P) == 0:
        raise IncompatibleError("recombination needs a nonempty point set")
    if s < 1:
        raise IncompatibleError("shuffle count must be >= 1")
    ws = problem.workspace()
    c, d, k = problem.c, problem.d, problem.k
    rows = ws.rows_for(P)
    tol = eps0 / (c * d ** k)
    t_red = t_score = 0.0
    best = None
    scores, seeds = [], []
    for j in range(s):
        seed = shuffle_seed(rng_seed, step, j)
        perm = np.random.default_rng(seed).permutation(len(rows))
        t0 = time.perf_counter()
        out = reduce(ReductionInput(ws.alpha, ws.H[rows[perm]], tol))
        t1 = time.perf_counter()
        b = out.dense(problem.n)
        score = ws.score(b, q)
        t_score += time.perf_counter() - t1
        t_red += t1 - t0
        scores.append(score)
        seeds.append(seed)
        if best is None or score < scores[best[0]]:
            best = (j, out, b)
    j, out, b = best
    u = linear_combination(
        [(b[i] * ws.sign[i] / problem.A[i], problem.features[i]) for i in out.support]
    )
    return StepReduction(u, out, j, scores, seeds, b, {"reduction": t_red, "scoring": t_score})
