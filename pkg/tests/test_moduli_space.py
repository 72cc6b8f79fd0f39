import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lawson_spectral.moduli_space import (
    AffineConnCoord,
    JacobianCoord,
    class_distance,
    class_equal,
    denormalize_trivialization,
    is_trivial_bundle,
    lattice_offset,
    normalize_trivialization,
    pi_project,
    reduce,
)

coord = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
shift = st.integers(-4, 4)


def test_reduce_examples():
    assert abs(reduce(0.6 + 0.7j) - (0.1 + 0.2j)) < 1e-15
    assert reduce(0) == 0
    assert JacobianCoord(0.6 + 0.7j).reduced() == JacobianCoord(complex(reduce(0.6 + 0.7j)))


def test_coupled_shifts_are_equivalent():
    p = AffineConnCoord(0.13 + 0.07j, 0.31 - 0.2j)
    assert class_equal(p, AffineConnCoord(p.x + 0.5, p.a + 0.5))
    assert class_equal(p, AffineConnCoord(p.x + 0.5j, p.a - 0.5j))
    assert not class_equal(p, AffineConnCoord(p.x, p.a + 0.3))


def test_uncoupled_shift_is_not_equivalent():
    p = AffineConnCoord(0.13 + 0.07j, 0.31 - 0.2j)
    assert not class_equal(p, AffineConnCoord(p.x + 0.5j, p.a + 0.5j))


def test_normalization_factor():
    assert normalize_trivialization(0) == 0
    assert abs(normalize_trivialization(-np.pi * (0.1 + 0.2j)) - (0.1 + 0.2j)) < 1e-15


def test_trivial_bundle_detection():
    assert is_trivial_bundle(0.5 + 0.5j)
    assert not is_trivial_bundle(0.25)


def test_branch_points_of_projection():
    assert pi_project(0.25j).is_branch_point
    assert not pi_project(0.1 + 0.2j).is_branch_point


@given(coord)
def test_reduce_lands_in_cell(x):
    r = complex(reduce(x))
    assert 0 <= r.real < 0.5 and 0 <= r.imag < 0.5


@given(coord)
def test_offset_reconstructs(x):
    m, n = lattice_offset(x)
    assert abs(complex(reduce(x)) + 0.5 * (m + 1j * n) - x) < 1e-12


@given(coord)
def test_projection_is_even(x):
    assert abs(pi_project(x).representative - pi_project(-x).representative) < 1e-9 or \
        pi_project(x).representative == pi_project(-x).representative


@given(coord, coord, shift, shift)
def test_class_distance_invariant_under_shifts(x, a, m, n):
    p = AffineConnCoord(x, a)
    q = AffineConnCoord(x + 0.01, a - 0.02j)
    assert abs(class_distance(p.shifted(m, n), q) - class_distance(p, q)) < 1e-12
    assert class_equal(p, p.shifted(m, n))


@given(coord)
def test_trivialization_round_trip(x):
    assert abs(normalize_trivialization(denormalize_trivialization(x)) - x) <= 1e-15 * max(1, abs(x))


def test_reduced_connection_is_equivalent():
    p = AffineConnCoord(1.37 - 0.81j, 0.2 + 0.4j)
    r = p.reduced()
    assert class_equal(p, r)
    assert 0 <= r.x.real < 0.5 and 0 <= r.x.imag < 0.5
