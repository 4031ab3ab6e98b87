import itertools
import math

import numpy as np
import pytest

from holgrim.combinatorics import dim_D, slot_keys
from holgrim.jets import Domain, JetFunction
from holgrim.problems import GeneratorSpec, gen_problem


def random_jet(rng, size=5, d=2, c=1, gamma=2.0, scale=1.0, domain=None):
    if domain is None:
        domain = Domain(rng.random((size, d)))
    k = math.ceil(gamma) - 1
    vals = scale * rng.standard_normal((domain.size, dim_D(domain.d, k), c))
    return JetFunction(domain, gamma, vals)


# -- independent oracles: loop over the full tensor grid, no expansion maps --

def full_coefficient(F, p, j, tup):
    """Value of the order-j form at point p on the basis tensor indexed by an
    arbitrary (unsorted, 1-based) tuple."""
    slot = slot_keys(F.d, F.k).index((j, tuple(sorted(tup))))
    return F.values[p, slot]


def oracle_form_matrix(F, p, j):
    cols = [full_coefficient(F, p, j, t) for t in itertools.product(range(1, F.d + 1), repeat=j)]
    return np.array(cols).T  # c x d^j


def oracle_opnorm(mat):
    return float(np.linalg.svd(mat, compute_uv=False)[0]) if mat.size else 0.0


def oracle_remainder(F, j, z, p):
    d, k = F.d, F.k
    w = F.domain.points[p] - F.domain.points[z]
    out = oracle_form_matrix(F, p, j).astype(float)
    for col, v in enumerate(itertools.product(range(1, d + 1), repeat=j)):
        for s in range(k - j + 1):
            acc = np.zeros(F.c)
            for tail in itertools.product(range(1, d + 1), repeat=s):
                weight = math.prod(w[t - 1] for t in tail)
                acc += full_coefficient(F, z, j + s, v + tail) * weight
            out[:, col] -= acc / math.factorial(s)
    return out


def oracle_lip_norm(F):
    best = 0.0
    for p in range(F.domain.size):
        for j in range(F.k + 1):
            best = max(best, oracle_opnorm(oracle_form_matrix(F, p, j)))
    X = F.domain.points
    for x in range(F.domain.size):
        for y in range(F.domain.size):
            if x == y:
                continue
            dist = np.linalg.norm(X[y] - X[x])
            for l in range(F.k + 1):
                best = max(best, oracle_opnorm(oracle_remainder(F, l, x, y)) / dist ** (F.gamma - l))
    return best


def oracle_best_moments(weights, moments, Q):
    """Exhaustive search over supports of size <= Q.

    Each support is solved by plain least squares; only solutions with
    nonnegative weights compete. (scipy's nnls is avoided: some releases
    report zero residual for wrong solutions.)
    """
    n = len(weights)
    X = np.vstack([np.ones(n), moments])
    target = X @ weights
    best, best_res = None, np.inf
    for size in range(1, min(Q, n) + 1):
        for sub in itertools.combinations(range(n), size):
            b = np.linalg.lstsq(X[:, sub], target, rcond=None)[0]
            if np.any(b < -1e-12):
                continue
            fit = X[:, sub] @ np.maximum(b, 0.0)
            res = np.max(np.abs(fit - target))
            if res < best_res:
                best, best_res = fit, res
    return best, target


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    spec = GeneratorSpec(n=60, d=2, c=1, gamma=2.0, size=15, coefficients="signed", seed=7, width_range=(0.2, 0.6))
    return gen_problem(spec)


@pytest.fixture(scope="session")
def rbf_problem():
    """The acceptance-scale gaussian problem: d=2, c=1, gamma=2, n=300, 100 points."""
    spec = GeneratorSpec(
        n=300, d=2, c=1, gamma=2.0, size=100, coefficients="positive", seed=1, width_range=(0.2, 0.6)
    )
    return gen_problem(spec)
