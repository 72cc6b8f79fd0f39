import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lawson_spectral.abelian_connection import DegenerateInputError
from lawson_spectral.monodromy import torus_monodromy, su2_realizable
from lawson_spectral.moduli_space import AffineConnCoord
from lawson_spectral.theta_engine import PoleError
from lawson_spectral.unitarizer import (
    AuCache,
    a_tilde,
    au_from_reduced,
    continuation_order,
    extract_b,
    grid_points,
    solve_au,
    solve_au_grid,
    trace_defect,
)

X0 = 0.13 + 0.07j
# root of (Im tr M_A, Im tr M_B) found by scipy fsolve on single-path transports at tol 1e-12
FSOLVE_AU = 0.20115494529881983 - 0.1095434927554017j
LEADING = 1 / (12 * np.pi)

cell_point = st.builds(complex, st.floats(0.06, 0.44), st.floats(0.06, 0.44))


@pytest.fixture(scope="module")
def sample():
    return solve_au(X0)


def test_matches_independent_root(sample):
    assert abs(sample.a_u - FSOLVE_AU) < 1e-9
    assert sample.su2_ok and sample.defect_norm < 1e-10


def test_monodromy_at_solution_is_unitarizable(sample):
    rep = torus_monodromy(AffineConnCoord(X0, sample.a_u), punctures=False)
    assert su2_realizable(rep)


def test_odd(sample):
    assert abs(solve_au(-X0).a_u + sample.a_u) < 1e-7


def test_real_shift(sample):
    assert abs(solve_au(X0 + 0.5).a_u - sample.a_u - 0.5) < 1e-7


def test_imaginary_shift(sample):
    assert abs(solve_au(X0 + 0.5j).a_u - sample.a_u + 0.5j) < 1e-7


def test_leading_pole_richardson():
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    v = np.array([e * solve_au(e).a_u for e in eps])
    # error is O(eps^2): one Richardson step with ratio 4
    r = (4 * v[1:] - v[:-1]) / 3
    assert abs(r[-1] - LEADING) < 1e-3 * LEADING
    assert abs(v[-1] - LEADING) < abs(v[0] - LEADING)


def test_tilde_shift_and_pole():
    x = 0.21 + 0.09j
    assert abs(a_tilde(x + 0.5) - a_tilde(x) - 0.5) < 1e-12
    assert abs(a_tilde(x + 0.5j) - a_tilde(x) + 0.5j) < 1e-12
    assert abs(1e-4 * a_tilde(1e-4) - LEADING) < 1e-6


def test_tilde_refuses_pole():
    with pytest.raises(PoleError):
        a_tilde(0.5j)


def test_b_periodic_and_odd(sample):
    b = extract_b(X0, sample).b
    assert abs(extract_b(X0 + 0.5).b - b) < 1e-6
    assert abs(extract_b(X0 + 0.5j).b - b) < 1e-6
    assert abs(extract_b(-X0).b + b) < 1e-6


def test_b_bounded_near_origin():
    bs = [abs(extract_b(e * (1 + 0.5j)).b) for e in (1e-2, 3e-3, 1e-3)]
    assert max(bs) < 1.0
    assert abs(bs[-1] - bs[-2]) < 0.05


def test_trivial_bundle_rejected():
    with pytest.raises(DegenerateInputError):
        solve_au(0.5 + 0.5j)


def test_cache_uses_shift_equations():
    cache = AuCache()
    v = cache.evaluate([X0, X0 + 0.5, X0 + 0.5j])
    assert len(cache) == 1
    assert abs(v[1] - v[0] - 0.5) < 1e-15 and abs(v[2] - v[0] + 0.5j) < 1e-15


def test_continuation_order_is_permutation():
    xs = grid_points(4)
    assert sorted(continuation_order(xs)) == list(range(len(xs)))


def test_grid_excludes_half_lattice():
    xs = grid_points(12, 0.05)
    assert len(xs) < 144
    assert np.all(np.abs(xs) > 0.05)


@given(cell_point)
def test_reduction_consistency(x):
    m, n = 1, -1
    assert abs(au_from_reduced(x + 0.5 * (m + 1j * n), 0.1) - (0.1 + 0.5 * (m - 1j * n))) < 1e-15


@given(cell_point)
def test_defect_vanishes_at_solution(x):
    s = solve_au_grid([x])[0]
    assert s.defect_norm < 1e-7
    assert np.abs(trace_defect(np.array([x]), np.array([s.a_u]))).max() < 1e-7
