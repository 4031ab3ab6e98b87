import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holgrim.errors import IncompatibleError, OrderRangeError, ValidationError
from holgrim.jets import (
    Domain,
    JetFunction,
    SymmetricForm,
    k_of_gamma,
    lambda_all,
    lambda_l,
    linear_combination,
    lip_norm,
    lip_norms,
    operator_norm,
    remainder,
    remainder_form,
    taylor_proposal,
)

from conftest import oracle_form_matrix, oracle_lip_norm, oracle_opnorm, oracle_remainder, random_jet


def jet_1d(points, table, gamma=2.0):
    return JetFunction(Domain(np.array(points, dtype=float)[:, None]), gamma, np.array(table, dtype=float))


def test_k_of_gamma():
    assert k_of_gamma(0.5) == 0
    assert k_of_gamma(1.0) == 0
    assert k_of_gamma(1.5) == 1
    assert k_of_gamma(2.0) == 1
    assert k_of_gamma(3.0) == 2
    with pytest.raises(ValueError):
        k_of_gamma(0.0)


def test_domain_rejects_duplicates_and_bad_shapes():
    with pytest.raises(ValidationError) as err:
        Domain([[0.0, 1.0], [0.0, 1.0]])
    assert err.value.check == "distinct-points"
    with pytest.raises(ValidationError):
        Domain(np.zeros((0, 2)))
    with pytest.raises(ValidationError):
        Domain([[np.nan]])


def test_table_shape_checked():
    dom = Domain([[0.0], [1.0]])
    with pytest.raises(ValidationError) as err:
        JetFunction(dom, 2.0, np.zeros((2, 3, 1)))
    assert err.value.check == "table-shape"
    # a 2-D table is read as c = 1
    assert JetFunction(dom, 2.0, np.zeros((2, 2))).c == 1


def test_values_read_only():
    F = jet_1d([0.0], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        F.values[0, 0, 0] = 3.0


# lambda_l -----------------------------------------------------------------

def test_lambda_zero_jet():
    F = JetFunction.zeros(Domain([[0.0, 0.0]]), 2.0)
    assert lambda_l(F, 0, 1) == 0.0


def test_lambda_hand_values():
    F = jet_1d([0.0], [[2.0, 3.0]])
    assert lambda_l(F, 0, 1) == 3.0
    assert lambda_l(F, 0, 0) == 2.0


def test_lambda_order_range():
    F = jet_1d([0.0], [[2.0, 3.0]])
    with pytest.raises(OrderRangeError):
        lambda_l(F, 0, 2)


def test_lambda_all_matches_pointwise(rng):
    F = random_jet(rng, size=6, d=3, c=2, gamma=2.5)
    for l in range(F.k + 1):
        got = lambda_all(F, l)
        assert np.allclose(got, [lambda_l(F, p, l) for p in range(6)], rtol=0, atol=1e-12)


# operator norms -----------------------------------------------------------

def test_opnorm_identity():
    assert operator_norm(SymmetricForm(1, 2, np.eye(2))) == pytest.approx(1.0, abs=1e-15)


def test_opnorm_mixed_second_order():
    form = SymmetricForm(2, 2, np.array([[0.0], [1.0], [0.0]]))
    assert operator_norm(form) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert np.array_equal(form.full(), [[0.0, 1.0, 1.0, 0.0]])


def test_opnorm_zero():
    assert operator_norm(SymmetricForm(2, 3, np.zeros((6, 2)))) == 0.0


def test_symmetric_form_lookup_and_size_check():
    form = SymmetricForm(2, 2, np.array([[1.0], [2.0], [3.0]]))
    assert form[(1, 2)][0] == 2.0
    with pytest.raises(IncompatibleError):
        SymmetricForm(2, 2, np.zeros((4, 1)))


def test_opnorm_matches_oracle(rng):
    for _ in range(20):
        F = random_jet(rng, size=2, d=3, c=2, gamma=3.0)
        for j in range(3):
            assert operator_norm(F.form(1, j)) == pytest.approx(oracle_opnorm(oracle_form_matrix(F, 1, j)), rel=1e-12)


# remainders ---------------------------------------------------------------

def test_remainder_same_point_zero(rng):
    F = random_jet(rng, size=3, d=2, c=1, gamma=3.0)
    for j in range(3):
        assert np.allclose(remainder_form(F, j, 1, 1).coeffs, 0.0, atol=1e-12)


def test_remainder_k0():
    F = jet_1d([0.0, 1.0], [[1.5], [4.0]], gamma=1.0)
    assert remainder(F, 0, 0, 1, ())[0] == pytest.approx(2.5)


def test_remainder_hand_taylor():
    F = jet_1d([0.0, 0.5], [[1.0, 2.0], [2.1, 0.0]])
    assert remainder(F, 0, 0, 1, ())[0] == pytest.approx(0.1, abs=1e-14)


def test_remainder_rejects_bad_index():
    F = jet_1d([0.0, 0.5], [[1.0, 2.0], [2.1, 0.0]])
    with pytest.raises(OrderRangeError):
        remainder(F, 1, 0, 1, (2,))


def test_remainder_matches_loop_oracle(rng):
    F = random_jet(rng, size=3, d=2, c=2, gamma=3.0)
    for j in range(3):
        got = remainder_form(F, j, 0, 2).full()
        assert np.allclose(got, oracle_remainder(F, j, 0, 2), atol=1e-12)


# Lip norms ----------------------------------------------------------------

def test_lip_norm_zero_and_constant():
    dom = Domain([[0.0], [0.3], [1.0]])
    assert lip_norm(JetFunction.zeros(dom, 1.0)) == 0.0
    assert lip_norm(JetFunction(dom, 1.0, np.full((3, 1), 5.0))) == 5.0


def test_lip_norm_two_points():
    F = jet_1d([0.0, 1.0], [[0.0], [3.0]], gamma=1.0)
    assert lip_norm(F) == 3.0


def test_lip_norm_matches_oracle(rng):
    for gamma, d, c in [(0.7, 2, 1), (2.0, 2, 2), (2.5, 1, 1), (3.0, 2, 1)]:
        F = random_jet(rng, size=5, d=d, c=c, gamma=gamma)
        assert lip_norm(F) == pytest.approx(oracle_lip_norm(F), rel=1e-12)


def test_lip_norm_frozen_value():
    # two-point jet on R^1, gamma = 2: the order-0 remainder is 4 - (1 + 2*1) = 1,
    # the order-1 remainder is 0 - 2 = -2, both over distance 1
    F = jet_1d([0.0, 1.0], [[1.0, 2.0], [4.0, 0.0]])
    assert lip_norm(F) == 4.0  # bound term |psi^(0)(1)| = 4 dominates
    G = jet_1d([0.0, 0.5], [[0.0, 0.0], [0.25, 1.0]])
    # order 0: 0.25 / 0.25 = 1; order 1: 1 / 0.5 = 2; reverse pair order 0:
    # 0 - (0.25 - 0.5) = 0.25 -> 1
    assert lip_norm(G) == pytest.approx(2.0, abs=1e-15)


def test_lip_norms_batch_agrees(rng):
    dom = Domain(rng.random((6, 2)))
    jets = [random_jet(rng, domain=dom, c=2) for _ in range(5)]
    assert np.allclose(lip_norms(jets, chunk=2), [lip_norm(F) for F in jets], rtol=1e-14)


def test_lambda_bounded_by_lip(rng):
    for _ in range(10):
        F = random_jet(rng, size=6, d=2, c=2, gamma=2.0)
        L = lip_norm(F)
        for p in range(6):
            assert lambda_l(F, p, 0) <= lambda_l(F, p, 1) <= L + 1e-12


# Taylor proposal, combinations ---------------------------------------------

def test_taylor_proposal():
    F = jet_1d([0.0], [[1.0, 2.0]])
    assert taylor_proposal(F, 0, [0.25])[0] == pytest.approx(1.5)
    assert taylor_proposal(F, 0, [0.0])[0] == 1.0
    Z = JetFunction.zeros(Domain([[0.0, 1.0]]), 3.0)
    assert np.all(taylor_proposal(Z, 0, [3.0, -2.0]) == 0.0)


def test_taylor_proposal_reproduces_quadratic(rng):
    # exact jet of f(x) = x^T B x / 2 + g.x + 1 at one point
    d = 2
    B = np.array([[2.0, 0.5], [0.5, -1.0]])
    g = np.array([0.3, -0.7])
    x = np.array([0.2, 0.4])
    grad = B @ x + g
    val = 0.5 * x @ B @ x + g @ x + 1.0
    table = np.array([[val, grad[0], grad[1], B[0, 0], B[0, 1], B[1, 1]]])
    F = JetFunction(Domain([x]), 3.0, table)
    v = np.array([-0.3, 0.9])
    assert taylor_proposal(F, 0, v)[0] == pytest.approx(0.5 * v @ B @ v + g @ v + 1.0, abs=1e-14)


def test_linear_combination(rng):
    dom = Domain(rng.random((4, 2)))
    F, G = random_jet(rng, domain=dom), random_jet(rng, domain=dom)
    assert np.array_equal(linear_combination([(1.0, F)]).values, F.values)
    assert np.all(linear_combination([(1.0, F), (-1.0, F)]).values == 0.0)
    assert np.allclose(linear_combination([(2.0, F), (3.0, G)]).values, 2 * F.values + 3 * G.values, atol=0)
    H = random_jet(rng, size=4)
    with pytest.raises(IncompatibleError):
        linear_combination([(1.0, F), (1.0, H)])
    with pytest.raises(IncompatibleError):
        linear_combination([(1.0, F), (1.0, random_jet(rng, domain=dom, gamma=1.0))])


# properties ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 1.0, 1.5, 2.0, 2.7, 3.0]), st.integers(1, 3), st.integers(1, 2))
def test_pointwise_estimates(seed, gamma, d, c):
    rng = np.random.default_rng(seed)
    F = random_jet(rng, size=5, d=d, c=c, gamma=gamma)
    K0 = lip_norm(F)
    k = F.k
    for p in range(5):
        eps0 = lambda_l(F, p, k)
        for z in range(5):
            r = float(np.linalg.norm(F.domain.points[z] - F.domain.points[p]))
            for l in range(k + 1):
                tail = sum(r**j / math.factorial(j) for j in range(k - l + 1))
                bound = min(K0, K0 * r ** (gamma - l) + eps0 * tail)
                assert operator_norm(F.form(z, l)) <= bound * (1 + 1e-12) + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 4))
def test_coefficient_bound(seed, d, m):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal(d**m)
    A = float(np.linalg.norm(T))
    assert np.abs(T).sum() <= A * d**m + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lambda_monotone_in_level(seed):
    rng = np.random.default_rng(seed)
    F = random_jet(rng, size=3, d=2, c=2, gamma=3.0)
    for p in range(3):
        vals = [lambda_l(F, p, l) for l in range(3)]
        assert vals == sorted(vals)
