import numpy as np
import pytest

from lawson_spectral.monodromy import PUNCTURES, Z0, TorusPath, lollipop
from lawson_spectral.spectral_solver import area
from lawson_spectral.surface_reconstruction import (
    OMEGA,
    Dressing,
    MeshResolution,
    ReconstructionError,
    build_mesh,
    c2_to_r4,
    desingularized_transport,
    half_cell_points,
    lambda_gauge,
    phi3,
    puncture_windings,
    spin_character,
    su2_to_c2,
    sym_evaluate,
    sym_from_transport,
    triple_loop,
)

SMALL = MeshResolution(side=2, levels=3)


@pytest.fixture(scope="module")
def small_mesh(lawson_data, lawson_base):
    return build_mesh(lawson_data, resolution=SMALL, base=lawson_base)


def _su2_defect(f):
    return float(np.abs(f @ f.conj().T - np.eye(2)).max())


def test_gauge_invertible_off_zero():
    t = np.array([0.3, 1j, -0.7 + 0.2j])
    assert np.allclose(np.linalg.det(lambda_gauge(t)), -2j * t)


def test_base_point_maps_to_identity(lawson_base):
    Y = np.broadcast_to(np.eye(2, dtype=complex), (lawson_base.circle.n + 2, 2, 2))
    assert np.abs(sym_from_transport(lawson_base, Y).f - np.eye(2)).max() < 1e-9


@pytest.mark.parametrize("w", [0.3 + 0.2j, -0.2 + 0.1j, 0.1 - 0.25j])
def test_points_lie_in_su2(lawson_base, w):
    f = sym_evaluate(lawson_base, TorusPath.polyline([Z0, Z0 + w]))
    assert _su2_defect(f) < 1e-6
    assert abs(np.linalg.det(f) - 1) < 1e-6


def test_conformal(lawson_base):
    z, h = Z0 + 0.3 + 0.2j, 1e-3
    pts = [z + h, z - h, z + 1j * h, z - 1j * h]
    paths = [TorusPath.polyline([Z0, z, q]) for q in pts]
    Y = lawson_base.transports(paths)
    F = [c2_to_r4(su2_to_c2(sym_from_transport(lawson_base, Y[:, k]).f)) for k in range(4)]
    fx, fy = (F[0] - F[1]) / (2 * h), (F[2] - F[3]) / (2 * h)
    scale = fx @ fx
    assert abs(fx @ fx - fy @ fy) / scale < 1e-4
    assert abs(fx @ fy) / scale < 1e-4


def test_homotopic_paths_agree(lawson_data):
    end = Z0 + 0.3 - 0.1j
    a = desingularized_transport(lawson_data, 0.8 + 0.1j, TorusPath.polyline([Z0, end]))
    b = desingularized_transport(lawson_data, 0.8 + 0.1j, TorusPath.polyline([Z0, Z0 + 0.2 + 0.15j, end]))
    assert np.abs(a - b).max() < 1e-9


@pytest.mark.parametrize("puncture", PUNCTURES)
def test_branch_point_holonomy(lawson_data, puncture):
    t = np.exp(0.3j)
    raw = desingularized_transport(lawson_data, t, triple_loop(puncture))
    comp = desingularized_transport(lawson_data, t, triple_loop(puncture), compensate=True)
    assert np.abs(raw + np.eye(2)).max() < 1e-5
    assert np.abs(comp - np.eye(2)).max() < 1e-5
    assert abs(np.linalg.det(raw) - 1) < 1e-8


def test_spin_character_counts_turns():
    assert puncture_windings(triple_loop(0))[0j] == 3
    assert abs(spin_character(lollipop(0)) - np.exp(1j * np.pi / 3)) < 1e-15


def test_transport_refuses_pole_parameter(lawson_data):
    with pytest.raises(ValueError):
        desingularized_transport(lawson_data, 0, TorusPath.polyline([Z0, Z0 + 0.1]))


def test_half_cell_geometry():
    z = half_cell_points(0j, 2, 3)
    assert z.shape == (5, 3)
    assert abs(z[0, 0] - Z0) < 1e-15 and abs(z[-1, 0] - (-0.5 - 0.5j)) < 1e-15
    assert np.abs(z[:, -1]).max() < 0.05


def test_phi3_order_three():
    v = np.array([[0.6, 0.8j]])
    assert np.allclose(phi3(v, 3), v) and np.allclose(phi3(v)[0, 0], OMEGA * 0.6)


def test_resolution_validated():
    with pytest.raises(ValueError):
        MeshResolution(side=0)
    with pytest.raises(ValueError):
        MeshResolution(levels=2)
    with pytest.raises(ValueError):
        MeshResolution(nodes=96)


def test_mesh_on_sphere(small_mesh):
    assert small_mesh.sphere_defect() < 1e-6


def test_mesh_phi3_invariant(small_mesh):
    assert small_mesh.phi3_defect() < 1e-4


def test_mesh_seams(small_mesh):
    assert small_mesh.report["seam_max"] < 1e-4


def test_mesh_frames(small_mesh):
    assert small_mesh.report["iwasawa_max"] < 1e-7
    assert small_mesh.report["unitary_max"] < 1e-9


def test_mesh_faces_valid(small_mesh):
    f = small_mesh.faces
    assert f.min() >= 0 and f.max() < len(small_mesh.vertices)
    assert len({tuple(sorted(r)) for r in f}) == len(f)


def test_mesh_area_order_of_magnitude(small_mesh, lawson_data):
    # the coarse mesh is within a few percent; the 1% check runs at full resolution
    assert abs(small_mesh.area() / area(lawson_data) - 1) < 0.05


def test_puncture_loops_are_rotations(small_mesh):
    assert max(small_mesh.report["loop_rotation_mismatch"].values()) < 1e-5


def test_seam_failure_is_an_error(lawson_data, lawson_base):
    with pytest.raises(ReconstructionError) as err:
        build_mesh(lawson_data, resolution=MeshResolution(1, 3), base=lawson_base, seam_tol=1e-13)
    assert err.value.mesh is not None and err.value.mesh.report["seam_max"] > 1e-13


def test_dressing_needs_disc(lawson_base):
    with pytest.raises(ValueError):
        Dressing.from_monodromy(lawson_base, 1.5)
    with pytest.raises(ValueError):
        Dressing.from_monodromy(lawson_base, np.exp(0.2j))


def test_dressing_moves_surface(lawson_data, lawson_base, small_mesh):
    dressed = build_mesh(lawson_data, resolution=SMALL, base=lawson_base, dressing_lambda=0.5 + 0.2j)
    k = len(dressed.vertices)
    assert dressed.sphere_defect() < 1e-6
    assert dressed.report["unitary_max"] < 1e-6
    assert np.abs(dressed.vertices - small_mesh.vertices[:k]).max() > 1e-3
