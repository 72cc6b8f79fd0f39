"""Spectral data on the double cover t^2 = lambda and the equations it solves.

    x(t) = x_1 t + x_3 t^3 + ... + x_{2N+1} t^{2N+1}
    a(t) = a_{-1}/t + a_1 t + a_3 t^3 + ...

Only odd powers are stored, so both maps are odd in t by construction.  The
data must satisfy

* reality:  a(t) = a^u(x(t)) for |t| = 1,
* closing:  (x, a) at t = 1 and t = i lies in the coupled-lattice class of
  (-(1+i)/4, (-1+i)/4), the point where the abelian holonomies are (-1, -1).

Given x, reality fixes a as the part of a^u(x(t)) with Fourier modes >= -1,
and is possible only if the modes below -1 vanish.  So x alone is unknown:
the solver asks that modes -3 .. -(2N+1) of a^u(x(t)) vanish and that x(1),
x(i) sit on the closing class, then reads a off the projection.  The modes
are taken on a fine quadrature circle.  Plain collocation on few nodes does
not work for these data: a^u(x(t)) has sizeable modes up to about 15, and on
16 nodes mode 11 folds onto mode -5 and the folded equation has no root.
What is left of a(t) - a^u(x(t)) on the circle is the neglected tail, and
reality_residual reports it at any node count.

Rescaling t so that the dz̄ coefficient -pi x(t) reads t + O(t^3) turns the
dz pole coefficient pi a_{-1} into c_{-1} = -pi^2 x_1 a_{-1}.  The values
c_{-1} = +-pi/12 belong to the exceptional limits and are excluded.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .moduli_space import AffineConnCoord, HALF, class_distance, half_lattice_distance
from .unitarizer import AuCache

log = logging.getLogger(__name__)

CLOSING_POINT = AffineConnCoord(-(1 + 1j) / 4, (-1 + 1j) / 4)
CLOSING_NODES = (1.0 + 0j, 1j)
FORBIDDEN_C = np.pi / 12
FORBIDDEN_MARGIN = 1e-3
DIFF_STEP = 1e-6


class ForbiddenLocusError(ValueError):
    pass


class SpectralConvergenceError(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True)
class SpectralData:
    x_coeffs: tuple
    a_coeffs: tuple  # a_{-1}, a_1, a_3, ...

    def __post_init__(self):
        object.__setattr__(self, "x_coeffs", tuple(complex(c) for c in self.x_coeffs))
        object.__setattr__(self, "a_coeffs", tuple(complex(c) for c in self.a_coeffs))
        if not self.x_coeffs or not self.a_coeffs:
            raise ValueError("both series need at least one coefficient")

    @property
    def N(self) -> int:
        return len(self.x_coeffs) - 1

    @property
    def x1(self) -> complex:
        return self.x_coeffs[0]

    @property
    def a_minus1(self) -> complex:
        return self.a_coeffs[0]

    def x(self, t):
        t = np.asarray(t, dtype=complex)
        return sum(c * t ** (2 * k + 1) for k, c in enumerate(self.x_coeffs))

    def a(self, t):
        t = np.asarray(t, dtype=complex)
        out = self.a_coeffs[0] / t
        for k, c in enumerate(self.a_coeffs[1:]):
            out = out + c * t ** (2 * k + 1)
        return out

    def to_vector(self) -> np.ndarray:
        z = np.array(self.x_coeffs + self.a_coeffs)
        return np.concatenate([z.real, z.imag])

    @classmethod
    def from_vector(cls, v, nx) -> "SpectralData":
        m = len(v) // 2
        z = v[:m] + 1j * v[m:]
        return cls(tuple(z[:nx]), tuple(z[nx:]))

    def resized(self, N, a_len=None) -> "SpectralData":
        """Truncate or zero-pad x to N + 1 coefficients and a to ``a_len``."""
        a_len = N + 1 if a_len is None else a_len
        xs = (list(self.x_coeffs) + [0j] * (N + 1))[: N + 1]
        as_ = (list(self.a_coeffs) + [0j] * a_len)[:a_len]
        return SpectralData(tuple(xs), tuple(as_))


@dataclass(frozen=True)
class SymConfig:
    lambda_1: complex = 1.0 + 0j
    lambda_2: complex = -1.0 + 0j

    def __post_init__(self):
        for lam in (self.lambda_1, self.lambda_2):
            if abs(abs(lam) - 1) > 1e-12:
                raise ValueError("Sym points must be unimodular")
        if abs(self.lambda_1 - self.lambda_2) < 1e-12:
            raise ValueError("Sym points must be distinct")

    @property
    def t_points(self):
        """Square roots on the cover, principal branch."""
        return complex(np.sqrt(complex(self.lambda_1))), complex(np.sqrt(complex(self.lambda_2)))


def mean_curvature(s: SymConfig) -> complex:
    l1, l2 = complex(s.lambda_1), complex(s.lambda_2)
    return 1j * (l1 + l2) / (l1 - l2)


def c_minus1(d: SpectralData) -> complex:
    return -np.pi**2 * d.x1 * d.a_minus1


def area_complex(d: SpectralData) -> complex:
    return -12 * np.pi * (1 / 6 - 2 * np.pi * d.x1 * d.a_minus1)


def area(d: SpectralData) -> float:
    """Area of the minimal surface carried by the data (real part)."""
    return float(area_complex(d).real)


def forbidden_distance(d: SpectralData) -> float:
    c = c_minus1(d)
    return float(min(abs(c - FORBIDDEN_C), abs(c + FORBIDDEN_C)))


def check_admissible(d: SpectralData, margin=FORBIDDEN_MARGIN):
    if abs(d.x1) < 1e-12:
        raise ForbiddenLocusError("x_1 = 0: the line bundle family is constant to first order")
    if forbidden_distance(d) < margin:
        raise ForbiddenLocusError("c_-1 = +-pi/12 is reserved for the exceptional limits")


def project_admissible(d: SpectralData, margin=FORBIDDEN_MARGIN) -> SpectralData:
    """Move a_{-1} the least amount that puts c_{-1} at ``margin`` from +-pi/12."""
    if abs(d.x1) < 1e-12:
        raise ForbiddenLocusError("x_1 = 0 cannot be repaired by moving a_-1")
    c = c_minus1(d)
    target = FORBIDDEN_C if abs(c - FORBIDDEN_C) <= abs(c + FORBIDDEN_C) else -FORBIDDEN_C
    if abs(c - target) >= margin:
        return d
    u = (c - target) / abs(c - target) if c != target else 1.0 + 0j
    c_new = target + margin * u
    a_new = c_new / (-np.pi**2 * d.x1)
    warnings.warn("initial c_-1 too close to +-pi/12; a_-1 projected away", RuntimeWarning)
    return SpectralData(d.x_coeffs, (a_new,) + d.a_coeffs[1:])


QUAD_NODES = 64


def half_circle_nodes(n_points: int):
    if n_points < 2 or n_points % 2:
        raise ValueError("n_points must be a positive even number")
    return np.exp(2j * np.pi * np.arange(n_points // 2) / n_points)


def branch_clearance(d: SpectralData, samples=256, seed=0) -> float:
    """Min distance from x(t) to the half lattice over random points 0 < |t| <= 1."""
    rng = np.random.default_rng(seed)
    t = np.sqrt(rng.uniform(1e-4, 1.0, samples)) * np.exp(2j * np.pi * rng.uniform(size=samples))
    t = np.concatenate([t, half_circle_nodes(64)])
    return float(half_lattice_distance(d.x(t)).min())


def _guard(xt):
    if np.any(half_lattice_distance(xt) < 1e-6):
        bad = int(np.argmin(half_lattice_distance(xt)))
        raise ForbiddenLocusError(f"x(t) hits the trivial bundle at node {bad}")


def reality_residual(d: SpectralData, n_points: int, cache: AuCache | None = None) -> np.ndarray:
    """Real and imaginary parts of a(t_j) - a^u(x(t_j)) on the upper half circle."""
    cache = cache if cache is not None else AuCache()
    t = half_circle_nodes(n_points)
    xt = d.x(t)
    _guard(xt)
    r = d.a(t) - cache.evaluate(xt)
    return np.concatenate([r.real, r.imag])


def _x_targets(d: SpectralData):
    """Nearest half-lattice translate of the closing x at each closing node."""
    out = []
    for t in CLOSING_NODES:
        dx = complex(d.x(t)) - CLOSING_POINT.x
        out.append(CLOSING_POINT.x + HALF * (round(dx.real / HALF) + 1j * round(dx.imag / HALF)))
    return out


def closing_residual(d: SpectralData) -> np.ndarray:
    """(x, a) at t = 1, i minus the nearest translate of the closing point."""
    res = []
    for t in CLOSING_NODES:
        p = AffineConnCoord(complex(d.x(t)), complex(d.a(t)))
        dx = p.x - CLOSING_POINT.x
        m0, n0 = round(dx.real / HALF), round(dx.imag / HALF)
        q = min((CLOSING_POINT.shifted(m, n) for m in (m0 - 1, m0, m0 + 1) for n in (n0 - 1, n0, n0 + 1)),
                key=lambda q: max(abs(q.x - p.x), abs(q.a - p.a)))
        res += [p.x - q.x, p.a - q.a]
    r = np.array(res)
    return np.concatenate([r.real, r.imag])


def closing_distance(d: SpectralData) -> float:
    return max(class_distance(CLOSING_POINT, AffineConnCoord(complex(d.x(t)), complex(d.a(t))))
               for t in CLOSING_NODES)


# -- solver ------------------------------------------------------------------

def _au_gradients(cache: AuCache, xt, h=DIFF_STEP):
    """a^u and its Wirtinger derivatives at xt by central differences."""
    pts = np.concatenate([xt, xt + h, xt - h, xt + 1j * h, xt - 1j * h])
    vals = cache.evaluate(pts).reshape(5, -1)
    A = vals[0]
    Ah = (vals[1] - vals[2]) / (2 * h)
    Av = (vals[3] - vals[4]) / (2 * h)
    return A, (Ah - 1j * Av) / 2, (Ah + 1j * Av) / 2


def _odd_modes(half_values, q, powers):
    """Fourier coefficients at ``powers`` of an odd function from its upper-half samples.

    ``half_values`` has the nodes on axis 0; any trailing axes ride along.
    """
    t = half_circle_nodes(q)
    W = t[None, :] ** (-np.asarray(powers)[:, None]) * (2 / q)
    return np.tensordot(W, half_values, axes=(1, 0))


def a_from_x(x_coeffs, quad_nodes: int = QUAD_NODES, cache: AuCache | None = None) -> SpectralData:
    """Spectral data whose a is the mode >= -1 part of a^u(x(t))."""
    cache = cache if cache is not None else AuCache()
    d = SpectralData(tuple(x_coeffs), (0j,))
    t = half_circle_nodes(quad_nodes)
    xt = d.x(t)
    _guard(xt)
    A = cache.evaluate(xt)
    powers = [-1] + list(range(1, quad_nodes // 2, 2))
    return SpectralData(d.x_coeffs, tuple(_odd_modes(A, quad_nodes, powers)))


def _system(x_coeffs, quad_nodes: int, cache: AuCache, closing_weight: float):
    """Killed modes and x-closing rows, with the Jacobian in (Re x, Im x)."""
    nx = len(x_coeffs)
    d = SpectralData(tuple(x_coeffs), (0j,))
    t = half_circle_nodes(quad_nodes)
    xt = d.x(t)
    _guard(xt)
    A, Ax, Axb = _au_gradients(cache, xt)
    killed = [-(2 * k + 1) for k in range(1, nx)]
    cols = []
    for k in range(nx):
        p = t ** (2 * k + 1)
        cols.append(Ax * p + Axb * np.conj(p))
    for k in range(nx):
        p = 1j * t ** (2 * k + 1)
        cols.append(Ax * p + Axb * np.conj(p))
    R = _odd_modes(A, quad_nodes, killed) if killed else np.zeros(0, complex)
    JR = _odd_modes(np.array(cols).T, quad_nodes, killed) if killed else np.zeros((0, 2 * nx), complex)
    C, JC = [], []
    for tc, target in zip(CLOSING_NODES, _x_targets(d)):
        C.append(complex(d.x(tc)) - target)
        row = np.array([tc ** (2 * k + 1) for k in range(nx)])
        JC.append(np.concatenate([row, 1j * row]))
    C = np.array(C) * closing_weight
    JC = np.array(JC) * closing_weight
    r = np.concatenate([R, C])
    J = np.vstack([JR, JC])
    return np.concatenate([r.real, r.imag]), np.vstack([J.real, J.imag])


@dataclass
class SolveReport:
    residual_history: list = field(default_factory=list)
    reality_max: float = np.inf
    reality_max_doubled: float = np.inf
    closing_max: float = np.inf
    iterations: int = 0
    singular_values: list = field(default_factory=list)
    converged: bool = False
    projected: bool = False
    au_evaluations: int = 0
    n_points: int = 0
    quad_nodes: int = 0

    @property
    def condition(self) -> float:
        s = self.singular_values
        return float(s[0] / s[-1]) if s and s[-1] > 0 else np.inf

    def as_dict(self):
        return {
            "residual_history": [float(r) for r in self.residual_history],
            "reality_max": float(self.reality_max),
            "reality_max_doubled": float(self.reality_max_doubled),
            "closing_max": float(self.closing_max),
            "iterations": self.iterations,
            "singular_values": [float(s) for s in self.singular_values],
            "condition": self.condition,
            "converged": self.converged,
            "projected": self.projected,
            "au_evaluations": self.au_evaluations,
            "n_points": self.n_points,
            "quad_nodes": self.quad_nodes,
        }


def solve_spectral(guess: SpectralData, n_points: int = 16, tol: float = 1e-8, max_iter: int = 40,
                   cache: AuCache | None = None, closing_weight: float = 1.0, strict: bool = True,
                   quad_nodes: int = QUAD_NODES):
    """Levenberg-Marquardt on the killed modes and the closing rows.

    Only the x coefficients of ``guess`` are used.  Converged when the
    max-norm of the projected residual is below ``tol``; the pointwise
    reality residual on ``n_points`` and 2 n_points nodes is reported, not
    solved for.  Returns (data, report).
    """
    cache = cache if cache is not None else AuCache()
    report = SolveReport(n_points=n_points, quad_nodes=quad_nodes)
    if quad_nodes < 4 * (guess.N + 2):
        raise ValueError("quad_nodes too small for the requested truncation")
    x = np.array(guess.x_coeffs, complex)
    if abs(x[0]) < 1e-12:
        raise ForbiddenLocusError("x_1 = 0: the line bundle family is constant to first order")
    nx = len(x)
    pack = lambda z: np.concatenate([z.real, z.imag])
    unpack = lambda v: v[:nx] + 1j * v[nx:]
    mu = 1e-3
    r, J = _system(x, quad_nodes, cache, closing_weight)
    for it in range(max_iter + 1):
        res = float(np.abs(r).max())
        report.residual_history.append(res)
        log.debug("spectral iteration %d residual %.3e", it, res)
        if res < tol:
            report.converged = True
            break
        if it == max_iter:
            break
        JTJ = J.T @ J
        g = J.T @ r
        accepted = False
        for _ in range(20):
            step = np.linalg.solve(JTJ + mu * np.diag(np.diag(JTJ) + 1e-14), -g)
            trial = unpack(pack(x) + step)
            try:
                r2, J2 = _system(trial, quad_nodes, cache, closing_weight)
            except ForbiddenLocusError:
                mu *= 10
                continue
            if np.linalg.norm(r2) < np.linalg.norm(r):
                x, r, J = trial, r2, J2
                mu = max(mu / 10, 1e-12)
                accepted = True
                break
            mu *= 10
        report.iterations = it + 1
        if not accepted:
            break
    d = a_from_x(x, quad_nodes, cache)
    if forbidden_distance(d) < FORBIDDEN_MARGIN:
        report.converged = False
        log.warning("solution sits on the forbidden locus c_-1 = +-pi/12")
    report.singular_values = list(np.linalg.svd(J, compute_uv=False))
    report.reality_max = float(np.abs(reality_residual(d, n_points, cache)).max())
    report.reality_max_doubled = float(np.abs(reality_residual(d, 2 * n_points, cache)).max())
    report.closing_max = float(np.abs(closing_residual(d)).max())
    report.au_evaluations = cache.misses
    if strict and not report.converged:
        raise SpectralConvergenceError(
            f"spectral solve stalled at residual {report.residual_history[-1]:.3e}", report)
    return d, report


def default_guess(N: int = 4) -> SpectralData:
    """Seed with x(t) = x_c t at the closing point and a from the leading terms of ã."""
    xc = CLOSING_POINT.x
    a_m1 = 1 / (12 * np.pi * xc) + 2 * np.conj(xc) / 3
    d = SpectralData((xc, 0), (a_m1, xc / 3))
    return d.resized(N)


def circle_samples(d: SpectralData, n: int = 64, cache: AuCache | None = None):
    """Rows (t, x(t), a(t), a^u(x(t))) on n equispaced circle nodes."""
    cache = cache if cache is not None else AuCache()
    t = np.exp(2j * np.pi * np.arange(n) / n)
    xt = d.x(t)
    return t, xt, d.a(t), cache.evaluate(xt)
