import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from wealthshare.errors import ConvergenceError, DomainError, NoSignChangeError
from wealthshare.special_functions import (
    BracketSolverSpec,
    QuadratureSpec,
    bessel_k,
    bessel_k_ratio,
    bessel_k_scaled,
    find_root,
    integrate,
)

# Frozen from a brute-force trapezoid of int_0^40 exp(-x cosh t) cosh(nu t) dt
# with step 1e-5 (independent of the library's integrator).
K0_AT_1 = 0.4210244382407085
K1_AT_1 = 0.6019072301972346
K0_OVER_K1_AT_4_SQRT_012 = 0.7577139998912451


def test_k0_k1_against_brute_force_trapezoid():
    assert bessel_k(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-12)
    assert bessel_k(1, 1.0) == pytest.approx(K1_AT_1, rel=1e-12)


def test_ratio_against_brute_force_trapezoid():
    z = 4 * math.sqrt(0.12)
    assert bessel_k_ratio(0, 1, z) == pytest.approx(K0_OVER_K1_AT_4_SQRT_012, rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 20.0])
def test_half_order_identity(x):
    exact = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
    assert abs(bessel_k(0.5, x) / exact - 1) < 1e-10


def test_half_order_at_two():
    assert bessel_k(0.5, 2.0) == pytest.approx(math.sqrt(math.pi / 4) * math.exp(-2), rel=1e-12)


def test_half_integer_ratio():
    assert bessel_k_ratio(-0.5, 1.5, 1.0) == pytest.approx(0.5, rel=1e-12)


def test_matches_scipy_on_grid():
    nu = np.linspace(-6, 6, 25)
    for x in [1e-4, 0.03, 0.7, 3.0, 40.0]:
        ours = np.array([bessel_k(v, x) for v in nu])
        ref = special.kv(nu, x)
        np.testing.assert_allclose(ours, ref, rtol=1e-12)


def test_vectorised_matches_scalar():
    x = np.geomspace(1e-3, 30, 57)
    vec = bessel_k(1.3, x)
    assert vec.shape == x.shape
    np.testing.assert_allclose(vec, [bessel_k(1.3, xi) for xi in x], rtol=1e-14)


def test_scaled_is_exp_x_times_k():
    for x in [0.2, 4.0, 300.0]:
        assert bessel_k_scaled(0.7, x) == pytest.approx(special.kve(0.7, x), rel=1e-12)


def test_large_argument_underflows_to_zero_in_unscaled_form():
    assert bessel_k(0.0, 1e4) == 0.0
    assert bessel_k_scaled(0.0, 1e4) > 0


def test_rejects_nonpositive_argument():
    with pytest.raises(DomainError):
        bessel_k(1.0, 0.0)
    with pytest.raises(DomainError):
        bessel_k(1.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 8), st.floats(0.05, 30))
def test_reflection_symmetry(nu, x):
    a, b = bessel_k(nu, x), bessel_k(-nu, x)
    assert abs(a - b) <= 1e-12 * abs(a)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 4), st.floats(0.5, 10))
def test_three_term_recurrence(nu, x):
    lhs = bessel_k(nu + 1, x)
    rhs = bessel_k(nu - 1, x) + 2 * nu / x * bessel_k(nu, x)
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 5), st.floats(0.01, 20), st.floats(0.01, 20))
def test_decreasing_in_x(nu, x1, x2):
    lo, hi = sorted((x1, x2))
    if hi - lo > 1e-6 * hi:
        assert bessel_k(nu, lo) > bessel_k(nu, hi)


# --- integrate -------------------------------------------------------------

def test_integrate_polynomial_exactly():
    assert integrate(lambda x: x**5 - 2 * x, 0.0, 2.0) == pytest.approx(64 / 6 - 4, rel=1e-14)


def test_integrate_semi_infinite():
    assert integrate(lambda x: np.exp(-x), 0.0, math.inf) == pytest.approx(1.0, rel=1e-12)


def test_integrate_doubly_infinite_gaussian():
    val = integrate(lambda x: np.exp(-x * x), -math.inf, math.inf)
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_integrate_reversed_limits_flip_sign():
    assert integrate(np.sin, math.pi, 0.0) == pytest.approx(-2.0, rel=1e-13)


def test_integrate_with_breakpoint_at_kink():
    val = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, points=[0.3])
    assert val == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-14)


def test_integrate_raises_with_estimate_when_budget_exhausted():
    spec = QuadratureSpec(atol=1e-300, rtol=1e-15, max_subdivisions=3)
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda x: np.sin(1.0 / x), 1e-4, 1.0, spec)
    assert info.value.estimate is not None


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(atol=-1.0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)


# --- find_root -------------------------------------------------------------

def test_find_root_sqrt2():
    root = find_root(lambda x: x * x - 2, BracketSolverSpec(0.0, 2.0, xtol=1e-14))
    assert root == pytest.approx(math.sqrt(2), abs=1e-13)


def test_find_root_exact_endpoint():
    assert find_root(lambda x: x - 1.0, BracketSolverSpec(1.0, 3.0)) == 1.0


def test_find_root_without_sign_change():
    with pytest.raises(NoSignChangeError):
        find_root(lambda x: x * x + 1, BracketSolverSpec(-1.0, 1.0))


def test_find_root_iteration_cap():
    with pytest.raises(ConvergenceError):
        find_root(lambda x: x - 0.3, BracketSolverSpec(0.0, 1.0, xtol=1e-15, max_iterations=5))


def test_bracket_spec_validation():
    with pytest.raises(DomainError):
        BracketSolverSpec(1.0, 1.0)
