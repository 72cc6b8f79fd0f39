"""From solved spectral data to the immersion in S^3.

The torus connection of (x(t), a(t)) depends on t, not on lambda = t^2, and
its pole at t = 0 is simple with a semisimple residue.  Conjugating by the
constant-in-z gauge

    K(t) = [[1, i], [t, -i t]]

gives a form that is even in t, hence a function of lambda, with a simple
pole at lambda = 0 whose residue is strictly upper triangular.  That is the
shape of the associated family of a minimal surface, and every family of
frames below is taken in this gauge.  The mirror gauge [[1, -i], [t, i t]]
differs by diag(lambda, 1) and also has that shape, but it yields another
minimal immersion (sheet area about 22.8 instead of 14.6).

At the base point the monodromy at each lambda on the unit circle fixes an
invariant Hermitian form H(lambda) (det 1).  Its positive spectral factor h
(H = h* h, h holomorphic in the disc) conjugates the monodromy into SU(2)
for all lambda at once.  For a point p reached along a path with transport
Y(lambda), the loop h Y^-1 is split as F B (unitary times positive), and

    f(p) = F(lambda_1) F(lambda_2)^-1,   f(base) = Id.

Loops are sampled on the circle rotated by half a node, so no node sits on
lambda = +-1 where the monodromy is central and H is undetermined; values at
the Sym points are read off the Fourier series of the positive factors.

The torus C/(2Z + 2iZ) is cut into four unit squares centred on the
punctures, all sharing the corner Z0.  The involution z -> -z maps each
square to itself, so half a square (rim from Z0 through the next corner to
the opposite one) times four punctures is a fundamental domain of the
quotient sphere.  Each half square is sampled on rays from its rim into the
puncture with radii graded like s^3, uniform in the coordinate of the
threefold cover.  Going once around a puncture moves f by an order-3
rotation; after the isometry that turns it into (a, b) -> (w a, b),
w = exp(2 pi i / 3), the three rotated copies of the four half squares
tile the genus-2 surface once.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .loops import (
    DEFAULT_MODES,
    IwasawaError,
    circle_nodes,
    dressing_matrix,
    eigenline,
    plus_value,
    positive_factor,
    unitarize_loop,
    unitary_defect,
)
from .monodromy import (
    DEFAULT_TOL,
    PUNCTURES,
    Z0,
    TorusPath,
    lollipop,
    period_monodromy_batch,
    transport_batch,
)
from .spectral_solver import SpectralData, SymConfig

SEAM_TOL = 1e-4
MESH_NODES = 128
OMEGA = np.exp(2j * np.pi / 3)


class ReconstructionError(RuntimeError):
    def __init__(self, msg, mesh=None):
        super().__init__(msg)
        self.mesh = mesh


def lambda_gauge(t):
    """K(t) = [[1, i], [t, -i t]], broadcast over t."""
    t = np.asarray(t, dtype=complex)
    K = np.zeros(t.shape + (2, 2), complex)
    K[..., 0, 0] = 1
    K[..., 0, 1] = 1j
    K[..., 1, 0] = t
    K[..., 1, 1] = -1j * t
    return K


def even_conjugate(Y, t):
    """K(t) Y K(t)^-1 with t on axis 0 of Y."""
    K = lambda_gauge(t)
    Ki = np.linalg.inv(K)
    extra = Y.ndim - 3
    K = K.reshape(K.shape[:1] + (1,) * extra + (2, 2))
    Ki = Ki.reshape(K.shape)
    return K @ Y @ Ki


@dataclass(frozen=True)
class LambdaCircle:
    """Loop nodes lambda_j = exp(i pi (2j + 1) / n) plus the two Sym points."""

    n: int = MESH_NODES
    sym: SymConfig = field(default_factory=SymConfig)

    @property
    def shift(self):
        return np.exp(1j * np.pi / self.n)

    @property
    def lam(self):
        return self.shift * circle_nodes(self.n)

    @property
    def t(self):
        """Square roots of the nodes on the upper half circle, then the Sym points."""
        half = np.exp(1j * np.pi * (np.arange(self.n) + 0.5) / self.n)
        return np.concatenate([half, np.array(self.sym.t_points)])

    @property
    def sym_lambdas(self):
        return np.array([self.sym.lambda_1, self.sym.lambda_2], complex)

    def mu(self, lam):
        """Loop variable in which the nodes are exp(2 pi i j / n)."""
        return np.asarray(lam) / self.shift


def invariant_form(mats):
    """Hermitian H > 0 with det 1 and M* H M = H for every M in ``mats``.

    ``mats`` has shape (..., m, 2, 2); the form is the least-squares null
    vector over the m matrices.
    """
    mats = np.asarray(mats, complex)
    basis = np.array([[[1, 0], [0, 0]], [[0, 0], [0, 1]], [[0, 1], [1, 0]], [[0, 1j], [-1j, 0]]], complex)
    Mh = np.conj(np.swapaxes(mats, -1, -2))
    L = Mh[..., None, :, :, :] @ basis[:, None] @ mats[..., None, :, :, :] - basis[:, None]  # (..., 4, m, 2, 2)
    L = np.moveaxis(L, -4, -1)  # (..., m, 2, 2, 4)
    rows = np.concatenate([L[..., 0, 0, :].real, L[..., 1, 1, :].real, L[..., 0, 1, :].real,
                           L[..., 0, 1, :].imag], axis=-2)
    _, sv, vt = np.linalg.svd(rows)
    v = vt[..., -1, :]
    H = np.tensordot(v, basis, axes=(-1, 0))
    tr = np.trace(H, axis1=-2, axis2=-1).real
    H = H * np.sign(tr)[..., None, None]
    det = np.linalg.det(H).real
    if np.any(det <= 0):
        raise ReconstructionError("monodromy has no invariant definite form on the unit circle")
    return H / np.sqrt(det)[..., None, None], sv[..., -1] / sv[..., 0]


@dataclass
class BaseFrame:
    """Data shared by all mesh points: nodes, spectral data, unitarizer at Z0."""

    data: SpectralData
    circle: LambdaCircle
    h_nodes: np.ndarray  # (n, 2, 2)
    h_sym: np.ndarray  # (2, 2, 2)
    form_defect: float
    tol: float = DEFAULT_TOL
    modes: int = DEFAULT_MODES

    @classmethod
    def build(cls, d: SpectralData, circle: LambdaCircle | None = None, tol=DEFAULT_TOL, modes=None):
        circle = circle or LambdaCircle()
        # frames near the punctures need nearly all resolvable modes
        modes = circle.n // 2 - 1 if modes is None else modes
        t = circle.t
        M = period_monodromy_batch(d.x(t), d.a(t), tol)  # (k, 2, 2, 2)
        Mh = even_conjugate(M, t)
        H, defect = invariant_form(Mh[: circle.n])
        h = positive_factor(H, modes)
        h_sym = plus_value(h, circle.mu(circle.sym_lambdas))
        return cls(d, circle, h, h_sym, float(np.max(defect)), tol, modes)

    def transports(self, paths, check_clearance=True):
        """Even-gauge transport along each path for all loop nodes: (k, npaths, 2, 2)."""
        t = self.circle.t
        Y = transport_batch(self.data.x(t), self.data.a(t), paths, self.tol, check_clearance)
        return even_conjugate(Y, t)


    def h_at(self, lam):
        return plus_value(self.h_nodes, self.circle.mu(lam))

    def loop_unitaries(self, path: TorusPath):
        """W(lambda_1), W(lambda_2) for a closed loop at Z0.

        A point reached by running the loop first and then a path c has
        f = W1 f_c W2^-1.
        """
        Y = self.transports([path])[self.circle.n:, 0]
        return self.h_sym @ np.linalg.inv(Y) @ np.linalg.inv(self.h_sym)


@dataclass(frozen=True)
class Dressing:
    """Simple factor with zero at lambda_0 acting on the frames at Z0."""

    lambda_0: complex
    line: np.ndarray

    @classmethod
    def from_monodromy(cls, base: BaseFrame, lambda_0):
        """Use the eigenline of the unitarized A-period monodromy at lambda_0."""
        lambda_0 = complex(lambda_0)
        if abs(abs(lambda_0) - 1) < 1e-12 or abs(lambda_0) >= 1:
            raise ValueError("lambda_0 must lie inside the unit disc")
        t0 = np.sqrt(lambda_0)
        M = period_monodromy_batch(base.data.x(np.array([t0])), base.data.a(np.array([t0])), base.tol)
        MA = even_conjugate(M, np.array([t0]))[0, 0]
        h0 = base.h_at(lambda_0)[0]
        W = h0 @ np.linalg.inv(MA) @ np.linalg.inv(h0)
        return cls(lambda_0, eigenline(W))

    def at(self, lam):
        return dressing_matrix(lam, self.lambda_0, self.line)


@dataclass
class PointFrame:
    f: np.ndarray
    iwasawa_residual: float
    unitary_residual: float


def sym_from_transport(base: BaseFrame, Y, dressing: Dressing | None = None) -> PointFrame:
    """f at a point whose even-gauge transport from Z0 is Y (shape (k, 2, 2))."""
    n = base.circle.n
    Yi = np.linalg.inv(Y)
    psi = base.h_nodes @ Yi[:n]
    psi_sym = base.h_sym @ Yi[n:]
    if dressing is not None:
        psi = dressing.at(base.circle.lam) @ psi
        psi_sym = dressing.at(base.circle.sym_lambdas) @ psi_sym
    res = unitarize_loop(psi, modes=base.modes, tail_limit=1e-5, tail_modes=base.modes)
    B_sym = plus_value(res.B, base.circle.mu(base.circle.sym_lambdas))
    F = psi_sym @ np.linalg.inv(B_sym)
    f = F[0] @ np.linalg.inv(F[1])
    return PointFrame(f, res.reconstruction_residual, max(res.unitary_residual, unitary_defect(F)))


def sym_evaluate(base: BaseFrame, path: TorusPath, dressing: Dressing | None = None) -> np.ndarray:
    """The S^3 point (as an SU(2) matrix) at the end of ``path`` from Z0."""
    if abs(path.start - Z0) > 1e-12:
        raise ValueError("paths start at the base point")
    Y = base.transports([path])[:, 0]
    return sym_from_transport(base, Y, dressing).f


def su2_to_c2(f):
    """[[a, -conj b], [b, conj a]] -> (a, b)."""
    return np.stack([f[..., 0, 0], f[..., 1, 0]], axis=-1)


def c2_to_r4(v):
    return np.concatenate([v.real, v.imag], axis=-1)


# -- the genus-2 connection -----------------------------------------------------------

def _winding(path: TorusPath, point, samples=512):
    total = 0.0
    for piece in path.pieces:
        if piece[0] == "line":
            z = piece[1] + np.linspace(0, 1, samples) * (piece[2] - piece[1])
        else:
            z = piece[1] + piece[2] * np.exp(1j * np.linspace(piece[3], piece[4], samples))
        total += float(np.sum(np.angle((z[1:] - point) / (z[:-1] - point))))
    return total / (2 * np.pi)


def puncture_windings(path: TorusPath):
    """Winding numbers of a loop closed in the plane around the poles it encloses."""
    if abs(path.end - path.start) > 1e-12:
        raise ValueError("winding numbers need a loop closed in the plane")
    zs = [p for piece in path.pieces for p in (piece[1],)]
    lo = np.floor(min(z.real for z in zs)) - 2, np.floor(min(z.imag for z in zs)) - 2
    hi = np.ceil(max(z.real for z in zs)) + 2, np.ceil(max(z.imag for z in zs)) + 2
    out = {}
    for m in range(int(lo[0]), int(hi[0]) + 1):
        for n in range(int(lo[1]), int(hi[1]) + 1):
            w = _winding(path, complex(m, n))
            if abs(w) > 0.5:
                out[complex(m, n)] = int(np.rint(w))
    return out


def spin_character(path: TorusPath) -> complex:
    """Scalar holonomy of the spin compensation: exp(i pi / 3) per turn.

    Three turns on the torus are one turn around the branch point of the
    threefold cover, where the compensation has holonomy -1.
    """
    return complex(np.exp(1j * np.pi / 3 * sum(puncture_windings(path).values())))


def desingularized_transport(d: SpectralData, t, path: TorusPath, compensate=False, tol=DEFAULT_TOL):
    """Transport of the lambda = t^2 family in the even gauge.

    Around a branch point of the threefold cover (three turns around a
    puncture) the result is -Id; with ``compensate`` it is multiplied by the
    spin character, which makes it Id since the genus-2 connection is smooth.
    """
    t = np.atleast_1d(np.asarray(t, complex))
    if np.any(t == 0):
        raise ValueError("t = 0 is the pole of the family")
    Y = even_conjugate(transport_batch(d.x(t), d.a(t), [path], tol, check_clearance=True), t)[:, 0]
    if compensate:
        Y = Y * spin_character(path)
    return Y if Y.shape[0] > 1 else Y[0]


def triple_loop(puncture, base=Z0, radius=None) -> TorusPath:
    """Lollipop around ``puncture`` running three times around the circle."""
    from .monodromy import PUNCTURE_RADIUS

    r = PUNCTURE_RADIUS if radius is None else radius
    u = (base - puncture) / abs(base - puncture)
    phi = np.angle(u)
    tail = TorusPath.polyline([base, puncture + r * u])
    arc = TorusPath((("arc", complex(puncture), r, phi, phi + 6 * np.pi),))
    return tail.then(arc).then(tail.reversed())


# -- the symmetry frame ------------------------------------------------------------

def _su2_eigenbasis(W, flip=False):
    w, V = np.linalg.eig(W)
    k = np.argsort(np.angle(w))[::-1]  # positive angle first
    if flip:
        k = k[::-1]
    P = V[:, k]
    P = P / np.linalg.norm(P, axis=0)
    # orthonormalize (eigenvectors of a unitary are orthogonal up to roundoff)
    P, _ = np.linalg.qr(P)
    return P / np.sqrt(np.linalg.det(P)), np.angle(w[k[0]])


@dataclass(frozen=True)
class SymmetryFrame:
    """Isometry f -> P^-1 f Q under which the puncture rotation is (a, b) -> (w a, b)."""

    P: np.ndarray
    Q: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    loop_power: int  # the puncture loop acts as phi_3 ** loop_power

    def apply(self, f):
        return np.conj(self.P.T) @ f @ self.Q

    def loop_mismatch(self, V1, V2) -> float:
        """Distance of f -> V1 f V2^-1, seen in this frame, from phi_3 or its inverse."""
        A = np.conj(self.P.T) @ V1 @ self.P
        B = np.conj(self.Q.T) @ np.linalg.inv(V2) @ self.Q
        probes = np.array([np.eye(2), [[0, -1], [1, 0]], [[0.6, -0.8j], [-0.8j, 0.6]]], complex)
        moved = su2_to_c2(A @ probes @ B)
        return float(min(np.abs(moved - phi3(su2_to_c2(probes), k)).max() for k in (1, 2)))

    @classmethod
    def from_loop(cls, W1, W2):
        P, u = _su2_eigenbasis(W1)
        best = None
        for flip in (False, True):
            Q, v = _su2_eigenbasis(W2, flip)
            # a -> exp(i(u - v)) a, b -> exp(-i(u + v)) b
            b_phase = abs(np.angle(np.exp(-1j * (u + v))))
            if best is None or b_phase < best[0]:
                best = (b_phase, Q, u - v)
        b_phase, Q, rot = best
        if b_phase > 1e-6:
            raise ReconstructionError(f"puncture loop does not fix a great circle (phase {b_phase:.1e})")
        k = int(np.rint(rot / (2 * np.pi / 3))) % 3
        if k == 0 or abs(np.exp(1j * rot) - OMEGA**k) > 1e-6:
            raise ReconstructionError("puncture loop is not an order-3 rotation")
        return cls(P, Q, W1, W2, k)


def phi3(v, power=1):
    """(a, b) -> (w^power a, b) on C^2 points."""
    out = np.array(v, complex, copy=True)
    out[..., 0] *= OMEGA**power
    return out


# -- sampling ----------------------------------------------------------------------

@dataclass(frozen=True)
class MeshResolution:
    side: int = 8  # rim points per square edge
    levels: int = 12  # radial levels per ray
    nodes: int = MESH_NODES  # lambda nodes

    def __post_init__(self):
        # three levels at least: the centre is a quadratic extrapolation
        if self.side < 1 or self.levels < 3:
            raise ValueError("resolution needs side >= 1 and levels >= 3")
        if self.nodes < 8 or self.nodes & (self.nodes - 1):
            raise ValueError("lambda node count must be a power of two >= 8")


def half_cell_points(puncture, side, levels):
    """Rim from Z0 through the next corner to the opposite one, rays graded s^3.

    Returns z of shape (2 side + 1, levels); column 0 is the rim.
    """
    c0 = Z0 - puncture
    corners = [c0 * 1j**k for k in range(3)]
    rim = [puncture + corners[k] + (corners[k + 1] - corners[k]) * j / side for k in range(2) for j in range(side)]
    rim.append(puncture + corners[2])
    s = np.arange(levels, 0, -1) / levels
    return puncture + (np.array(rim)[:, None] - puncture) * s[None, :] ** 3


@dataclass
class HalfCell:
    puncture: complex
    z: np.ndarray  # (nb, K)
    f: np.ndarray  # (nb, K, 2, 2)
    centre: np.ndarray  # (2, 2)
    iwasawa_residual: float
    unitary_residual: float


def sample_half_cell(base: BaseFrame, puncture, side, levels, dressing: Dressing | None = None) -> HalfCell:
    z = half_cell_points(puncture, side, levels)
    nb, K = z.shape
    rim = [TorusPath.polyline([Z0, z[0, 0]])] if abs(z[0, 0] - Z0) > 1e-12 else []
    rim += [TorusPath.polyline([z[j, 0], z[j + 1, 0]]) for j in range(nb - 1)]
    rays = [TorusPath.polyline([z[j, l], z[j, l + 1]], 0.0) for j in range(nb) for l in range(K - 1)]
    T = base.transports(rim + rays, check_clearance=False)
    k = T.shape[0]
    lead = len(rim) - (nb - 1)
    Tr, Ty = T[:, lead: len(rim)], T[:, len(rim):].reshape(k, nb, K - 1, 2, 2)
    Y = np.empty((k, nb, K, 2, 2), complex)
    Y[:, 0, 0] = T[:, 0] if lead else np.eye(2)
    for j in range(1, nb):
        Y[:, j, 0] = Tr[:, j - 1] @ Y[:, j - 1, 0]
    for l in range(1, K):
        Y[:, :, l] = Ty[:, :, l - 1] @ Y[:, :, l - 1]
    f = np.empty((nb, K, 2, 2), complex)
    rec = uni = 0.0
    for j in range(nb):
        for l in range(K):
            pf = sym_from_transport(base, Y[:, j, l], dressing)
            f[j, l] = pf.f
            rec, uni = max(rec, pf.iwasawa_residual), max(uni, pf.unitary_residual)
    # f is smooth in the covering coordinate, whose radius is linear in s
    s = np.arange(K, 0, -1) / K
    s3, f3 = s[-3:], f[:, -3:]
    w = np.array([s3[1] * s3[2] / ((s3[0] - s3[1]) * (s3[0] - s3[2])),
                  s3[0] * s3[2] / ((s3[1] - s3[0]) * (s3[1] - s3[2])),
                  s3[0] * s3[1] / ((s3[2] - s3[0]) * (s3[2] - s3[1]))])
    centre = _nearest_su2(np.tensordot(w, f3, axes=(0, 1)).mean(axis=0))
    return HalfCell(complex(puncture), z, f, centre, rec, uni)


def _sample_task(args):
    return sample_half_cell(*args)


def _nearest_su2(m):
    u, _, vh = np.linalg.svd(m)
    q = u @ vh
    return q / np.sqrt(np.linalg.det(q))


# -- mesh --------------------------------------------------------------------------

def _grid_faces(nb, K, offset):
    idx = offset + np.arange(nb * K).reshape(nb, K)
    a, b, c, d = idx[:-1, :-1], idx[1:, :-1], idx[1:, 1:], idx[:-1, 1:]
    quads = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    centre = offset + nb * K
    fan = np.stack([idx[:-1, -1], idx[1:, -1], np.full(nb - 1, centre)], -1)
    return np.concatenate([quads, fan])


def _tri_area(p, q, r):
    u, v = q - p, r - p
    uu = (u * u).sum(-1)
    vv = (v * v).sum(-1)
    uv = (u * v).sum(-1)
    return 0.5 * np.sqrt(np.maximum(uu * vv - uv**2, 0))


def _conformality(z, P):
    """|f_x|^2 - |f_y|^2 and f_x.f_y relative to the energy, by grid differences."""
    fj, fl = np.gradient(P, axis=0), np.gradient(P, axis=1)
    zj, zl = np.gradient(z, axis=0), np.gradient(z, axis=1)
    det = zj.real * zl.imag - zj.imag * zl.real
    fx = (zl.imag[..., None] * fj - zj.imag[..., None] * fl) / det[..., None]
    fy = (-zl.real[..., None] * fj + zj.real[..., None] * fl) / det[..., None]
    xx, yy, xy = (fx * fx).sum(-1), (fy * fy).sum(-1), (fx * fy).sum(-1)
    return (np.abs(xx - yy) + 2 * np.abs(xy)) / (xx + yy)


@dataclass
class SurfaceMesh:
    """Triangulated immersion in S^3, vertices as (a, b) with |a|^2 + |b|^2 = 1."""

    vertices: np.ndarray  # (V, 2) complex
    faces: np.ndarray  # (F, 3) int
    conformality: np.ndarray  # (V,) grid-difference residual, nan at centres
    orbit: np.ndarray  # (V,) phi_3 power of the copy the vertex belongs to
    report: dict = field(default_factory=dict)

    def area(self) -> float:
        P = c2_to_r4(self.vertices)
        return float(_tri_area(P[self.faces[:, 0]], P[self.faces[:, 1]], P[self.faces[:, 2]]).sum())

    def sphere_defect(self) -> float:
        return float(np.abs(np.linalg.norm(self.vertices, axis=-1) - 1).max())

    def phi3_defect(self) -> float:
        """Largest distance from a rotated vertex to the nearest vertex."""
        from scipy.spatial import cKDTree

        tree = cKDTree(c2_to_r4(self.vertices))
        dist, _ = tree.query(c2_to_r4(phi3(self.vertices)))
        return float(dist.max())


def _same_points(za, zb):
    for sign in (1, -1):
        for rev in (False, True):
            zq = sign * (zb[::-1] if rev else zb)
            dz = (zq - za) / 2
            if np.abs(dz - np.round(dz.real) - 1j * np.round(dz.imag)).max() < 1e-9:
                return rev
    return None


def seam_errors(cells, frame: SymmetryFrame):
    """Max mismatch, up to phi_3 powers, of vertices shared by adjacent domains."""
    out = {}
    for ci, c in enumerate(cells):
        v = su2_to_c2(frame.apply(c.f))
        nb = v.shape[0]
        side = (nb - 1) // 2
        # the rays along Z0 and along the opposite corner are swapped by z -> -z
        out[f"sigma_{ci}"] = min(np.abs(phi3(v[0], k) - v[-1]).max() for k in range(3))
        for e, sl in enumerate((slice(0, side + 1), slice(side, nb))):
            za, va = c.z[sl, 0], v[sl, 0]
            for cj, d in enumerate(cells):
                if cj <= ci:
                    continue
                w = su2_to_c2(frame.apply(d.f))
                for e2, sl2 in enumerate((slice(0, side + 1), slice(side, nb))):
                    rev = _same_points(za, d.z[sl2, 0])
                    if rev is None:
                        continue
                    vb = w[sl2, 0][::-1] if rev else w[sl2, 0]
                    out[f"edge_{ci}{e}_{cj}{e2}"] = min(np.abs(phi3(va, k) - vb).max() for k in range(3))
    return {k: float(v) for k, v in out.items()}


def build_mesh(d: SpectralData, sym: SymConfig | None = None, resolution: MeshResolution | None = None,
               dressing_lambda: complex | None = None, workers: int = 1, base: BaseFrame | None = None,
               seam_tol: float = SEAM_TOL) -> SurfaceMesh:
    """Sample the fundamental domain, complete by phi_3 and triangulate.

    With ``dressing_lambda`` the frames are dressed by the simple factor at
    that point; the dressed surface keeps the undressed symmetry frame, is
    not completed by phi_3 and seams are reported but not enforced.
    """
    res = resolution or MeshResolution()
    sym = sym or SymConfig()
    if base is None:
        base = BaseFrame.build(d, LambdaCircle(res.nodes, sym))
    W1, W2 = base.loop_unitaries(lollipop(PUNCTURES[0]))
    frame = SymmetryFrame.from_loop(W1, W2)
    rotations = {}
    for p in PUNCTURES[1:]:
        rotations[str(p)] = frame.loop_mismatch(*base.loop_unitaries(lollipop(p)))
    dressing = Dressing.from_monodromy(base, dressing_lambda) if dressing_lambda is not None else None
    tasks = [(base, p, res.side, res.levels, dressing) for p in PUNCTURES]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            cells = list(ex.map(_sample_task, tasks))
    else:
        cells = [_sample_task(t) for t in tasks]

    seams = seam_errors(cells, frame)
    copies = range(3) if dressing is None else range(1)
    verts, faces, conf, orbit = [], [], [], []
    offset = 0
    for k in copies:
        for c in cells:
            nb, K = c.z.shape
            v = su2_to_c2(frame.apply(c.f)).reshape(-1, 2)
            v = np.concatenate([v, su2_to_c2(frame.apply(c.centre))[None]])
            verts.append(phi3(v, k))
            faces.append(_grid_faces(nb, K, offset))
            P = c2_to_r4(su2_to_c2(frame.apply(c.f)))
            conf.append(np.concatenate([_conformality(c.z, P).ravel(), [np.nan]]))
            orbit.append(np.full(len(v), k))
            offset += len(v)
    mesh = SurfaceMesh(np.concatenate(verts), np.concatenate(faces), np.concatenate(conf), np.concatenate(orbit))
    centres = np.array([su2_to_c2(frame.apply(c.centre)) for c in cells])
    mesh.report = {
        "lambda_nodes": res.nodes,
        "side": res.side,
        "levels": res.levels,
        "dressing_lambda": None if dressing is None else [dressing.lambda_0.real, dressing.lambda_0.imag],
        "form_defect": base.form_defect,
        "iwasawa_max": max(c.iwasawa_residual for c in cells),
        "unitary_max": max(c.unitary_residual for c in cells),
        "sphere_defect": mesh.sphere_defect(),
        "seam_errors": seams,
        "seam_max": max(seams.values()),
        "loop_rotation_mismatch": rotations,
        "branch_point_offset": float(np.abs(centres[:, 0]).max()),
        "conformality_median": float(np.nanmedian(mesh.conformality)),
        "area_mesh": mesh.area(),
    }
    if dressing is None and mesh.report["seam_max"] > seam_tol:
        raise ReconstructionError(f"seam mismatch {mesh.report['seam_max']:.2e} above {seam_tol:.0e}", mesh)
    return mesh
