import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lawson_spectral.theta_engine import (
    PoleError,
    ThetaFn,
    bundle_section,
    invariant_suite,
    quasi_period_factor,
    theta,
    theta_prime,
)

# exp(i pi z) * jtheta(1, pi z, exp(-pi)) from mpmath at 30 digits
MPMATH_VALUES = [
    (0.3 + 0.4j, 0.025130807897399465 + 0.470594064497139j),
    (0.2 + 0.1j, 0.22967236638386582 + 0.38008434637583416j),
    (-0.37 + 0.21j, -0.08657194128131834 + 0.5415351906742254j),
    (0.5 + 0.5j, 0.49534705376439925j),
    (1.1 - 0.7j, 16.438025658940973 - 27.795183432693708j),
]
MPMATH_PRIME = (0.3 + 0.4j, -0.051246958534004385 + 0.28355054979343525j)

cell = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("z, expected", MPMATH_VALUES)
def test_theta_matches_independent_series(z, expected):
    assert abs(theta(z) - expected) < 1e-13 * max(1, abs(expected))


def test_theta_prime_matches_independent_derivative():
    z, expected = MPMATH_PRIME
    assert abs(theta_prime(z) - expected) < 1e-13


def test_theta_vanishes_at_origin():
    assert abs(theta(0)) < 1e-12


def test_real_period():
    assert abs(theta(0.3 + 0.4j) - theta(1.3 + 0.4j)) < 1e-14


def test_imaginary_quasi_period():
    z = 0.2 + 0.1j
    assert abs(theta(z + 1j) / theta(z) - np.exp(-2j * np.pi * (z - (1 + 1j) / 2) + np.pi)) < 1e-12


def test_reflection_is_imaginary_shift():
    z = 0.37 - 0.21j
    assert abs(theta(-z) - theta(z + 1j)) < 1e-12


def test_theta_prime_periodic():
    z = 0.41 + 0.33j
    assert abs(theta_prime(z + 1) - theta_prime(z)) < 1e-12


def test_section_periodic_and_vanishing():
    x, z = 0.2 + 0.3j, 0.5 + 0.6j
    assert abs(bundle_section(x, z + 1) - bundle_section(x, z)) < 1e-12
    assert abs(bundle_section(x, z + 1j) - bundle_section(x, z)) < 1e-12
    assert abs(bundle_section(x, x)) < 1e-14


def test_section_dbar_equation():
    x, z, h = 0.2 + 0.3j, 0.5 + 0.6j, 1e-5
    s = lambda w: bundle_section(x, w)
    dbar = 0.5 * ((s(z + h) - s(z - h)) / (2 * h) + 1j * (s(z + 1j * h) - s(z - 1j * h)) / (2 * h))
    assert abs(dbar / (np.pi * x * s(z)) - 1) < 1e-6


def test_section_refuses_pole():
    with pytest.raises(PoleError):
        bundle_section(0.2 + 0.3j, 1 + 1e-4j)


def test_suite_passes_at_default_truncation():
    results = invariant_suite()
    assert all(ok for _, ok in results.values())
    assert max(results[k][0] for k in ("period_1", "period_i")) < 1e-12


def test_suite_flags_under_truncation():
    failed = {k for k, (_, ok) in invariant_suite(ThetaFn(2)).items() if not ok}
    assert "period_i" in failed


def test_suite_rejects_empty_grid():
    with pytest.raises(ValueError):
        invariant_suite(points=0)


def test_truncation_must_be_positive():
    with pytest.raises(ValueError):
        ThetaFn(0)


@given(cell)
def test_period_property(z):
    assert abs(theta(z + 1) - theta(z)) <= 1e-12 * max(1, abs(theta(z)))


@given(cell)
def test_quasi_period_property(z):
    lhs = theta(z + 1j)
    rhs = theta(z) * quasi_period_factor(z)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs), abs(rhs))


@given(cell)
def test_vectorized_agrees_with_scalar(z):
    zs = np.array([z, z + 0.1, z - 0.2j])
    assert np.allclose(theta(zs), [theta(w) for w in zs], rtol=1e-15, atol=0)
