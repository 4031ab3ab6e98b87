import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holgrim.algorithm import Config, Problem, extension_step, normalize, run
from holgrim.combinatorics import q_count
from holgrim.errors import BudgetError, ValidationError
from holgrim.geometry import ThresholdQuery, exact_packing, solve_r
from holgrim.jets import Domain, JetFunction, lambda_all, linear_combination
from holgrim.problems import GeneratorSpec, gen_problem

from conftest import random_jet


def test_normalize_positive_unit_scales(small_problem):
    p = small_problem
    prob = Problem(p.domain, p.features, np.abs(p.a), np.maximum(p.A, 1.0))
    prob_unit = Problem(p.domain, p.features[:2], [0.5, 0.25], [1.0, 1.0], validate=False)
    alpha, h, sign = normalize(prob_unit)
    assert np.array_equal(alpha, [0.5, 0.25])
    assert all(np.array_equal(hi.values, fi.values) for hi, fi in zip(h, prob_unit.features))
    assert np.all(sign == 1)
    assert prob.C > 0


def test_normalize_negative_coefficient(rng):
    dom = Domain(rng.random((3, 2)))
    f = random_jet(rng, domain=dom)
    prob = Problem(dom, [f], [-2.0], [4.0], validate=False)
    alpha, h, sign = normalize(prob)
    assert alpha[0] == 8.0
    assert np.allclose(h[0].values, -f.values / 4, rtol=0, atol=0)
    assert sign[0] == -1


def test_normalize_reassembles_phi(small_problem):
    alpha, h, _ = normalize(small_problem)
    back = linear_combination(zip(alpha, h))
    assert np.max(np.abs(back.values - small_problem.phi().values)) <= 1e-12


def test_problem_validation(small_problem):
    p = small_problem
    with pytest.raises(ValidationError) as err:
        Problem(p.domain, p.features, np.where(np.arange(p.n) == 3, 0.0, p.a), p.A)
    assert err.value.check == "nonzero-coefficients"
    with pytest.raises(ValidationError) as err:
        Problem(p.domain, p.features, p.a, p.A * 0.5)
    assert err.value.check == "scaling-bound"
    with pytest.raises(ValidationError) as err:
        Problem(p.domain, p.features, p.a, -p.A)
    assert err.value.check == "positive-scalings"
    with pytest.raises(ValidationError):
        Problem(p.domain, p.features, p.a[:-1], p.A)
    # exact Lip norms pass
    Problem(p.domain, p.features, p.a, p.A)


def test_config_validation(small_problem):
    p = small_problem  # n=60, d=2, k=1, Lambda=15: kappa <= min(59/3, 15) = 15
    Config(1.0, 0.1, 1, 15, 1, 1).validate(p)
    with pytest.raises(ValidationError) as err:
        Config(1.0, 0.1, 1, 16, 1, 1).validate(p)
    assert err.value.check == "kappa-bound"
    with pytest.raises(ValidationError) as err:
        Config(1.0, 0.5, 1, 3, 1, 1).validate(p)  # bound is 1/(1*2) = 0.5, strict
    assert err.value.check == "epsilon0-bound"
    with pytest.raises(ValidationError) as err:
        Config(1.0, 0.1, 2, 3, 1, 1).validate(p)
    assert err.value.check == "order-level"
    with pytest.raises(ValidationError):
        Config(1.0, 0.1, 0, 3, [1, 1], 1)
    with pytest.raises(ValidationError):
        Config(1.0, 0.1, 0, 3, 1, [1, 0, 1])
    cfg = Config(1.0, 0.0, 0, 3, [1, 2, 3], 2)
    assert cfg.budgets == [2, 2, 2] and cfg.kappa == 6


# extension step -----------------------------------------------------------

def test_extension_single_support_point(rng):
    dom = Domain(rng.random((6, 2)))
    vals = np.zeros((6, 3, 1))
    vals[4, 1, 0] = 0.3
    phi = JetFunction(dom, 2.0, vals)
    zero = JetFunction.zeros(dom, 2.0)
    assert extension_step([], zero, 1, 1, phi) == [4]


def test_extension_full_sort(rng):
    phi = random_jet(rng, size=8, d=2, c=2)
    u = random_jet(rng, domain=phi.domain, c=2)
    for q in (0, 1):
        got = extension_step([], u, 8, q, phi)
        diff = np.abs(phi.values - u.values)[:, : (1 if q == 0 else 3)].reshape(8, -1)
        peaks = diff.max(axis=1)
        expected = sorted(range(8), key=lambda p: (-peaks[p], p))
        assert got == expected


def test_extension_respects_previous_and_budget(rng):
    phi = random_jet(rng, size=5)
    zero = JetFunction.zeros(phi.domain, 2.0)
    got = extension_step([2, 0], zero, 3, 1, phi)
    assert got[:2] == [2, 0] and sorted(got) == list(range(5))
    with pytest.raises(BudgetError):
        extension_step([2, 0], zero, 4, 1, phi)


# run ----------------------------------------------------------------------

def test_run_identity_when_n_at_most_Q(small_problem):
    p = small_problem
    n = q_count(1, p.c, p.d, p.k)
    prob = Problem(p.domain, p.features[:n], p.a[:n], p.A[:n])
    res = run(prob, Config(1e-9, 0.0, 1, 1, 1, 1))
    assert res.steps[0].residual == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.dense_coefficients(n), prob.a, rtol=1e-14, atol=0)
    res = run(prob, Config(1e-9, 0.0, 1, 1, 1, 1))
    assert res.stop_reason == "max-steps" and res.criterion_met


def test_run_huge_epsilon_stops_at_first_check(small_problem):
    res = run(small_problem, Config(1e12, 0.0, 1, 5, 1, 1))
    assert res.steps_completed == 1
    assert res.stop_reason == "criterion" and res.criterion_met


def test_run_max_steps(small_problem):
    res = run(small_problem, Config(1e-12, 0.0, 1, 4, 1, 1))
    assert res.steps_completed == 4 and res.stop_reason == "max-steps"
    assert not res.criterion_met
    assert len(res.selected_points) == len(set(res.selected_points)) == 4


def test_run_rbf_end_to_end(rbf_problem):
    p = rbf_problem
    q = 1
    eps = 0.1 * p.C
    eps0 = eps / (4 * p.c * p.d**q)
    res = run(p, Config(eps, eps0, q, 99, 1, 1, 0))
    assert res.stop_reason == "criterion"
    assert abs(res.coefficient_sum - p.C) <= 1e-10 * p.C
    assert res.final_lambda_q <= eps
    u = p.combine(res.dense_coefficients(p.n))
    assert lambda_all(p.phi() - u, q).max() == pytest.approx(res.final_lambda_q, rel=1e-12)
    assert np.all(res.coefficients >= 0)
    assert len(res.support) <= q_count(res.steps_completed, p.c, p.d, p.k)


def test_run_deterministic(small_problem):
    cfg = Config(0.05 * small_problem.C, 0.0, 0, 6, 2, 1, rng_seed=4)
    a, b = run(small_problem, cfg), run(small_problem, cfg)
    assert a.selected_points == b.selected_points
    assert np.array_equal(a.coefficients, b.coefficients)
    assert a.seeds == b.seeds == [4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10][: len(a.seeds)]


def small_random_problem(seed, signed=True, size=12, n=45):
    spec = GeneratorSpec(
        n=n, d=2, c=1, gamma=2.0, size=size, seed=seed, width_range=(0.2, 0.6),
        coefficients="signed" if signed else "positive",
    )
    return gen_problem(spec)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000), st.booleans(), st.sampled_from([0, 1]), st.sampled_from([0.02, 0.05, 0.1]))
def test_run_invariants(seed, signed, q, frac):
    p = small_random_problem(seed, signed)
    eps = frac * p.C
    eps0 = eps / (4 * p.c * p.d**q)
    M = p.domain.size
    res = run(p, Config(eps, eps0, q, M, 1, 1, seed))
    # termination
    assert res.steps_completed <= min(M, p.domain.size)
    # coefficient sum identity and sign preservation
    assert abs(res.coefficient_sum - p.C) <= 1e-10 * p.C
    if not signed:
        assert np.all(res.coefficients >= 0)
    assert len(res.support) <= q_count(res.steps_completed, p.c, p.d, p.k)
    # separation
    r = solve_r(ThresholdQuery(p.C, p.gamma, eps, eps0, p.c, p.d, q))
    assert res.min_separation > r
    X = p.domain.points
    for st_ in res.steps:
        # interpolation at the selected points
        assert st_.lambda_k_selected <= eps0
        # intermediate pointwise bound
        dist = np.min(np.linalg.norm(X[:, None] - X[st_.selected][None], axis=-1), axis=1)
        grow = np.max([dist ** (p.gamma - h) for h in range(q + 1)], axis=0)
        bound = np.minimum(2 * p.C, 2 * p.C * grow + eps0 * np.exp(dist))
        assert np.all(st_.lambda_q <= bound + 1e-9)
    if res.stop_reason == "criterion":
        assert res.final_lambda_q <= eps


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_step_count_within_packing(seed):
    p = small_random_problem(seed, size=10, n=40)
    q = 0
    eps = 0.02 * p.C
    eps0 = eps / (4 * p.c * p.d**q)
    res = run(p, Config(eps, eps0, q, p.domain.size, 1, 1, seed))
    r = solve_r(ThresholdQuery(p.C, p.gamma, eps, eps0, p.c, p.d, q))
    assert res.steps_completed <= exact_packing(p.domain, r)
