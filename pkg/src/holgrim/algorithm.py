"""Greedy point selection interleaved with recombination.

:func:`run` approximates ``phi = sum_i a_i f_i`` on a finite domain by a
sparse nonnegative recombination of the normalised features
``h_i = sign(a_i) f_i / A_i``. Each step adds the points carrying the
largest functional residual, then recombines so the approximation
interpolates the target's jets at every selected point. The run stops once
every functional of order ``<= q`` is within ``epsilon / (c d**q)``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .combinatorics import dim_D
from .errors import BudgetError, IncompatibleError, ValidationError
from .functionals import eval_vector, sigma_star
from .jets import Domain, JetFunction, lambda_all, linear_combination, lip_norms
from .recombination import recombination_step

LIP_TOL = 1e-9


class Problem:
    """``phi = sum_i a_i f_i`` with Lip-norm over-bounds ``A_i``.

    ``analytic`` optionally carries the feature family the jets were
    restricted from, so errors can be probed off the domain.
    """

    def __init__(self, domain: Domain, features: Sequence[JetFunction], a, A, analytic=None, validate=True):
        self.domain = domain
        self.features = list(features)
        self.a = np.asarray(a, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.analytic = analytic
        self._ws = None
        self._check_shapes()
        if validate:
            self.check_scalings()

    def _check_shapes(self):
        n = len(self.features)
        if n < 1:
            raise ValidationError("feature-count", "a problem needs at least one feature")
        if self.a.shape != (n,) or self.A.shape != (n,):
            raise ValidationError(
                "coefficient-shape",
                f"need {n} coefficients and {n} scalings, got {self.a.shape} and {self.A.shape}",
            )
        first = self.features[0]
        for i, F in enumerate(self.features):
            if F.domain != self.domain:
                raise ValidationError("feature-domain", f"feature {i} lives on a different domain")
            if F.gamma != first.gamma or F.c != first.c:
                raise ValidationError("feature-regularity", f"feature {i} has a different gamma or c")
        if not np.all(np.isfinite(self.a)) or np.any(self.a == 0):
            bad = np.flatnonzero(~np.isfinite(self.a) | (self.a == 0))
            raise ValidationError("nonzero-coefficients", f"coefficients must be finite and nonzero; bad indices {bad[:10].tolist()}")
        if not np.all(np.isfinite(self.A)) or np.any(self.A <= 0):
            bad = np.flatnonzero(~np.isfinite(self.A) | (self.A <= 0))
            raise ValidationError("positive-scalings", f"scalings must be positive; bad indices {bad[:10].tolist()}")

    def check_scalings(self, tol: float = LIP_TOL) -> np.ndarray:
        """Verify ``lip_norm(f_i) <= A_i``; returns the measured norms."""
        norms = lip_norms(self.features)
        bad = np.flatnonzero(norms - self.A > tol * np.maximum(1.0, self.A))
        if len(bad):
            i = int(bad[0])
            raise ValidationError(
                "scaling-bound",
                f"feature {i} has Lip norm {norms[i]!r} above its scaling {self.A[i]!r} ({len(bad)} violations)",
            )
        return norms

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def gamma(self) -> float:
        return self.features[0].gamma

    @property
    def k(self) -> int:
        return self.features[0].k

    @property
    def c(self) -> int:
        return self.features[0].c

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def C(self) -> float:
        return float(np.sum(np.abs(self.a) * self.A))

    def phi(self) -> JetFunction:
        return linear_combination(zip(self.a, self.features))

    def combine(self, coeffs) -> JetFunction:
        """``sum_i coeffs_i f_i`` over the nonzero coefficients."""
        coeffs = np.asarray(coeffs, dtype=float)
        idx = np.flatnonzero(coeffs)
        if len(idx) == 0:
            return JetFunction.zeros(self.domain, self.gamma, self.c)
        return linear_combination([(coeffs[i], self.features[i]) for i in idx])

    def workspace(self) -> "Workspace":
        if self._ws is None:
            self._ws = Workspace(self)
        return self._ws


def normalize(problem: Problem):
    """Positive weights ``alpha``, unit-scaled signed features and the sign map."""
    sign = np.sign(problem.a)
    alpha = np.abs(problem.a) * problem.A
    h = [F * (s / A) for F, s, A in zip(problem.features, sign, problem.A)]
    return alpha, h, sign


class Workspace:
    """Evaluation matrix of the normalised features over ``sigma_star(k)``.

    Built once per problem; every residual scan reuses it.
    """

    def __init__(self, problem: Problem):
        t0 = time.perf_counter()
        self.sign = np.sign(problem.a)
        self.alpha = np.abs(problem.a) * problem.A
        scale = self.sign / problem.A
        self.values = np.stack([F.values.reshape(-1) for F in problem.features], axis=1)
        self.H = self.values * scale[None, :]
        self.target = self.H @ self.alpha
        c, d, k = problem.c, problem.d, problem.k
        self.width = c * dim_D(d, k)
        self.size = problem.domain.size
        self.n = problem.n
        self._qrows = {}
        self.c, self.d = c, d
        self.build_time = time.perf_counter() - t0

    def rows_for(self, P: Sequence[int]) -> np.ndarray:
        """Rows of ``L(k)`` for the point list ``P`` in canonical order."""
        P = np.asarray(P, dtype=np.intp)
        return (P[:, None] * self.width + np.arange(self.width)[None, :]).reshape(-1)

    def qrows(self, q: int) -> np.ndarray:
        if q not in self._qrows:
            wq = self.c * dim_D(self.d, q)
            pts = np.arange(self.size)
            self._qrows[q] = (pts[:, None] * self.width + np.arange(wq)[None, :]).reshape(-1)
        return self._qrows[q]

    def residual(self, b: np.ndarray, q: int) -> np.ndarray:
        """``sigma(phi - u)`` over ``sigma_star(q)`` for ``u = sum b_i h_i``."""
        rows = self.qrows(q)
        return self.target[rows] - self.H[rows] @ b

    def score(self, b: np.ndarray, q: int) -> float:
        return float(np.max(np.abs(self.residual(b, q))))

    def coefficient_score(self, support, coeffs, q: int) -> float:
        """Score of ``u = sum_s coeffs_s f_{support_s}`` on the unscaled features.

        Used for reported and re-scored residuals so both go through the
        same arithmetic.
        """
        rows = self.qrows(q)
        resid = self.target[rows] - self.values[np.ix_(rows, np.asarray(support, dtype=np.intp))] @ coeffs
        return float(np.max(np.abs(resid)))


@dataclass
class Config:
    epsilon: float
    epsilon0: float
    q: int
    max_steps: int
    shuffles: Sequence[int] | int = 1
    budgets: Sequence[int] | int = 1
    rng_seed: int = 0

    def __post_init__(self):
        M = int(self.max_steps)
        if M < 1:
            raise ValidationError("max-steps", f"max_steps must be >= 1, got {self.max_steps}")
        self.max_steps = M
        self.shuffles = self._expand("shuffles", self.shuffles)
        self.budgets = self._expand("budgets", self.budgets)

    def _expand(self, name, value) -> list[int]:
        vals = [int(value)] * self.max_steps if np.ndim(value) == 0 else [int(v) for v in value]
        if len(vals) != self.max_steps:
            raise ValidationError(f"{name}-length", f"need {self.max_steps} {name}, got {len(vals)}")
        if any(v < 1 for v in vals):
            raise ValidationError(f"{name}-positive", f"all {name} must be >= 1, got {vals}")
        return vals

    @property
    def kappa(self) -> int:
        return sum(self.budgets)

    def validate(self, problem: Problem) -> None:
        c, d, k = problem.c, problem.d, problem.k
        if not self.epsilon > 0:
            raise ValidationError("epsilon-positive", f"epsilon must be > 0, got {self.epsilon}")
        if not 0 <= self.q <= k:
            raise ValidationError("order-level", f"order level q={self.q} outside 0..{k}")
        bound = self.epsilon / (c * d ** self.q)
        if not 0 <= self.epsilon0 < bound:
            raise ValidationError(
                "epsilon0-bound",
                f"need 0 <= epsilon0 < epsilon/(c d^q) = {bound!r}, got epsilon0={self.epsilon0!r}",
            )
        D = dim_D(d, k)
        cap = min((problem.n - 1) / (c * D), problem.domain.size)
        if self.kappa > cap:
            raise ValidationError(
                "kappa-bound",
                f"kappa = k_1 + ... + k_M = {self.kappa} > min((n-1)/(c D(d,k)), Lambda) "
                f"= min({problem.n - 1}/{c * D}, {problem.domain.size}) = {cap:.6g}",
            )


@dataclass
class StepRecord:
    index: int
    new_points: list[int]
    selected: list[int]
    seeds: list[int]
    chosen_shuffle: int
    scores: list[float]
    score: float
    support: np.ndarray
    weights: np.ndarray  # normalised weights b on ``support``
    coefficients: np.ndarray  # signed, on the original features, aligned to ``support``
    achieved_residual: float
    exceeded: bool
    lambda_q: np.ndarray  # Lambda^q(phi - u_t)(z) for every z
    lambda_k_selected: float  # max over selected z of Lambda^k(phi - u_t)(z)
    residual: float  # max |sigma(phi - u_t)| over sigma_star(q), from ``coefficients``
    timings: dict = field(default_factory=dict)


@dataclass
class RunResult:
    steps_completed: int
    stop_reason: str  # "criterion" or "max-steps"
    criterion_met: bool
    selected_points: list[int]
    steps: list[StepRecord]
    support: np.ndarray
    coefficients: np.ndarray
    coefficient_sum: float
    C: float
    final_lambda_q: float
    final_residual: float
    min_separation: float
    seeds: list[int]
    reports: list[dict]
    timings: dict

    def dense_coefficients(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.support] = self.coefficients
        return out


def _extend(P_prime: Sequence[int], residual: np.ndarray, m: int, width: int, size: int) -> list[int]:
    taken = list(P_prime)
    if len(taken) + m > size:
        raise BudgetError(f"cannot add {m} points to {len(taken)} of {size}")
    score = np.abs(residual).reshape(size, width).copy()
    score[taken] = -np.inf
    flat = score.reshape(-1)
    for _ in range(m):
        z = int(np.argmax(flat)) // width
        taken.append(z)
        score[z] = -np.inf
    return taken


def extension_step(P_prime: Sequence[int], u: JetFunction, m: int, q: int, phi: JetFunction) -> list[int]:
    """Extend ``P_prime`` by ``m`` points of largest functional residual.

    Functionals at already chosen points are excluded, so points never
    repeat; ties go to the canonically first functional.
    """
    if not phi.compatible_with(u):
        raise IncompatibleError("phi and u must share domain, gamma and c")
    L = sigma_star(phi.domain, phi.c, q)
    resid = eval_vector(phi, L) - eval_vector(u, L)
    return _extend(P_prime, resid, m, phi.c * dim_D(phi.d, q), phi.domain.size)


def min_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return float("inf")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    return float(dist[np.triu_indices(len(points), 1)].min())


def run(problem: Problem, config: Config) -> RunResult:
    config.validate(problem)
    t_start = time.perf_counter()
    ws = problem.workspace()
    phi = problem.phi()
    c, d, k, q = problem.c, problem.d, problem.k, config.q
    crit = config.epsilon / (c * d ** q)
    wq = c * dim_D(d, q)
    timings = {"matrix": ws.build_time, "extension": 0.0, "reduction": 0.0, "scoring": 0.0}

    selected: list[int] = []
    steps: list[StepRecord] = []
    reports: list[dict] = []
    b = np.zeros(problem.n)
    stop_reason = "max-steps"
    for t in range(1, config.max_steps + 1):
        resid = ws.residual(b, q)
        if t >= 2 and np.max(np.abs(resid)) <= crit:
            stop_reason = "criterion"
            break
        t0 = time.perf_counter()
        new_sel = _extend(selected, resid, config.budgets[t - 1], wq, problem.domain.size)
        t_ext = time.perf_counter() - t0
        step = recombination_step(
            new_sel, problem, config.shuffles[t - 1], q, config.epsilon0, config.rng_seed, step=t - 1
        )
        out = step.output
        if out.exceeded:
            reports.append({"step": t, "achieved_residual": out.achieved_residual, "floor": out.floor})
        diff = phi - step.u
        lam_q = lambda_all(diff, q)
        lam_k = lambda_all(diff, k)
        b = step.weights
        coeffs = ws.sign[out.support] * out.weights / problem.A[out.support]
        steps.append(
            StepRecord(
                index=t,
                new_points=new_sel[len(selected):],
                selected=list(new_sel),
                seeds=step.seeds,
                chosen_shuffle=step.chosen_shuffle,
                scores=step.scores,
                score=step.score,
                support=out.support,
                weights=out.weights,
                coefficients=coeffs,
                achieved_residual=out.achieved_residual,
                exceeded=out.exceeded,
                lambda_q=lam_q,
                lambda_k_selected=float(lam_k[new_sel].max()),
                residual=ws.coefficient_score(out.support, coeffs, q),
                timings={"extension": t_ext, **step.timings},
            )
        )
        timings["extension"] += t_ext
        timings["reduction"] += step.timings["reduction"]
        timings["scoring"] += step.timings["scoring"]
        selected = new_sel

    final = steps[-1]
    criterion_met = stop_reason == "criterion" or final.score <= crit
    timings["total"] = time.perf_counter() - t_start
    return RunResult(
        steps_completed=len(steps),
        stop_reason=stop_reason,
        criterion_met=bool(criterion_met),
        selected_points=selected,
        steps=steps,
        support=final.support,
        coefficients=final.coefficients,
        coefficient_sum=float(np.sum(np.abs(final.coefficients) * problem.A[final.support])),
        C=problem.C,
        final_lambda_q=float(final.lambda_q.max()),
        final_residual=final.residual,
        min_separation=min_pairwise_distance(problem.domain.points[selected]),
        seeds=[s for st in steps for s in st.seeds],
        reports=reports,
        timings=timings,
    )
