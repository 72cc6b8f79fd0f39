"""Parallel transport and monodromy on the four-punctured torus C/(2Z + 2iZ).

Transport solves dY/ds = -(A_dz z'(s) + A_dz̄ conj z'(s)) Y with Y(0) = Id
along polylines, using scipy's DOP853 (adaptive, order 8 with embedded
error estimators).  Paths compose right to left: following p then q gives
T(q) @ T(p).

Puncture loops are based at Z0 = (1+i)/2, the centre of the square with
corners -(1+i)/2 and (3+3i)/2 that contains the punctures 0, 1, i, 1+i.
Each loop runs straight towards its puncture, once counterclockwise around a
circle of radius 1/4 and back.  The boundary of that square, read from its
lower-left corner, is the commutator of the period loops; carried back to
Z0 along the connector Z0 -> (1-i)/2 -> -(1+i)/2 it satisfies

    C^-1 (M_B^-1 M_A^-1 M_B M_A) C = P_0 P_i P_{1+i} P_1

with C the transport along the connector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .abelian_connection import C_SIGN, _c_unsigned, build_form, form_coefficients
from .moduli_space import AffineConnCoord
from .theta_engine import PoleError, lattice_distance

Z0 = 0.5 + 0.5j
MIN_CLEARANCE = 0.25
PUNCTURE_RADIUS = 0.25
PUNCTURES = (0j, 1 + 0j, 1j, 1 + 1j)
IRREDUCIBLE_TOL = 1e-6
DEFAULT_TOL = 1e-11


class ClearanceError(ValueError):
    pass


class ReducibleError(ValueError):
    pass


class TransportError(RuntimeError):
    pass


# -- paths -------------------------------------------------------------------

def _segment_clearance(p, q, period=1.0):
    # sample densely; lattice points are isolated so this is a safe bound
    s = np.linspace(0.0, 1.0, 401)
    return float(lattice_distance(p + s * (q - p), period).min())


@dataclass(frozen=True)
class TorusPath:
    """Polyline of straight segments and circular arcs.

    ``pieces`` holds ("line", p, q) or ("arc", centre, radius, phi0, phi1).
    """

    pieces: tuple
    min_clearance: float = MIN_CLEARANCE

    @classmethod
    def polyline(cls, waypoints, min_clearance=MIN_CLEARANCE):
        w = [complex(p) for p in waypoints]
        for p, q in zip(w, w[1:]):
            if p == q:
                raise ValueError("consecutive waypoints must differ")
        return cls(tuple(("line", p, q) for p, q in zip(w, w[1:])), min_clearance)

    @property
    def start(self):
        p = self.pieces[0]
        return p[1] if p[0] == "line" else p[1] + p[2] * np.exp(1j * p[3])

    @property
    def end(self):
        p = self.pieces[-1]
        return p[2] if p[0] == "line" else p[1] + p[2] * np.exp(1j * p[4])

    def then(self, other: "TorusPath") -> "TorusPath":
        if abs(self.end - other.start) > 1e-12:
            raise ValueError("paths do not connect")
        return TorusPath(self.pieces + other.pieces, min(self.min_clearance, other.min_clearance))

    def reversed(self) -> "TorusPath":
        out = []
        for p in reversed(self.pieces):
            if p[0] == "line":
                out.append(("line", p[2], p[1]))
            else:
                out.append(("arc", p[1], p[2], p[4], p[3]))
        return TorusPath(tuple(out), self.min_clearance)

    def clearance(self, period=1.0) -> float:
        best = np.inf
        for p in self.pieces:
            if p[0] == "line":
                best = min(best, _segment_clearance(p[1], p[2], period))
            else:
                phi = np.linspace(p[3], p[4], 401)
                best = min(best, float(lattice_distance(p[1] + p[2] * np.exp(1j * phi), period).min()))
        return best


def _piece_geometry(piece):
    """z(s), z'(s) on s in [0, 1]."""
    if piece[0] == "line":
        _, p, q = piece
        d = q - p
        return (lambda s: p + s * d), (lambda s: d)
    _, c, r, f0, f1 = piece
    df = f1 - f0
    return (lambda s: c + r * np.exp(1j * (f0 + s * df))), (lambda s: 1j * df * r * np.exp(1j * (f0 + s * df)))


def lollipop(puncture, base=Z0, radius=PUNCTURE_RADIUS) -> TorusPath:
    u = (base - puncture) / abs(base - puncture)
    phi = np.angle(u)
    touch = puncture + radius * u
    tail = TorusPath.polyline([base, touch])
    circle = TorusPath((("arc", complex(puncture), radius, phi, phi + 2 * np.pi),))
    return tail.then(circle).then(tail.reversed())


def period_path(direction, base=Z0) -> TorusPath:
    """Straight loop base -> base + 2*direction (direction 1 or 1j)."""
    return TorusPath.polyline([base, base + direction, base + 2 * direction])


CONNECTOR = TorusPath.polyline([Z0, 0.5 - 0.5j, -0.5 - 0.5j])


# -- integration -------------------------------------------------------------

def _integrate(coeffs, paths, batch, tol):
    """Transport for ``batch`` forms along each path in ``paths``.

    ``coeffs(z)`` takes z of shape (batch, n_paths) and returns the dz and dz̄
    coefficient arrays of shape (batch, n_paths, 2, 2).  All paths must have
    the same number of pieces; they are integrated jointly piece by piece.
    """
    n = len(paths)
    npieces = len(paths[0].pieces)
    if any(len(p.pieces) != npieces for p in paths):
        raise ValueError("joint integration needs paths with equal piece counts")
    Y = np.broadcast_to(np.eye(2, dtype=complex), (batch, n, 2, 2)).copy()
    for k in range(npieces):
        geo = [_piece_geometry(p.pieces[k]) for p in paths]

        def rhs(s, yflat, geo=geo):
            Yc = yflat.reshape(batch, n, 2, 2)
            z = np.array([g[0](s) for g in geo])[None, :]
            dz = np.array([g[1](s) for g in geo])[None, :, None, None]
            p, q = coeffs(np.broadcast_to(z, (batch, n)))
            A = p * dz + q * np.conj(dz)
            return (-A @ Yc).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), Y.ravel(), method="DOP853", rtol=tol, atol=tol)
        if not sol.success:
            raise TransportError(sol.message)
        Y = sol.y[:, -1].reshape(batch, n, 2, 2)
    return Y


def _check_clearance(path: TorusPath, form):
    if getattr(form, "pole_set", ()) and path.clearance(getattr(form, "pole_period", 1.0)) < path.min_clearance - 1e-12:
        raise ClearanceError("path passes closer to a pole than the configured clearance")


def transport(form, path: TorusPath, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Transport matrix of ``form`` along ``path`` (form exposes .along(z, dz))."""
    if not (1e-13 <= tol <= 1e-6):
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    _check_clearance(path, form)

    Y = np.eye(2, dtype=complex)
    for piece in path.pieces:
        zf, dzf = _piece_geometry(piece)

        def rhs(s, yflat, zf=zf, dzf=dzf):
            A = form.along(zf(s), dzf(s))
            return (-A @ yflat.reshape(2, 2)).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), Y.ravel(), method="DOP853", rtol=tol, atol=tol)
        if not sol.success:
            raise TransportError(sol.message)
        Y = sol.y[:, -1].reshape(2, 2)
    return Y


def transport_batch(x, a, paths, tol: float = DEFAULT_TOL, check_clearance: bool = True) -> np.ndarray:
    """Transport of build_form(x_k, a_k) along every path, jointly.

    Returns shape (len(x), len(paths), 2, 2).  Paths that deliberately run
    into a puncture (radial rays of the mesh) pass check_clearance=False.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    x, a = np.broadcast_arrays(x, a)
    for p in paths if check_clearance else ():
        if p.clearance() < p.min_clearance - 1e-12:
            raise ClearanceError("path passes closer to a pole than the configured clearance")
    c = (C_SIGN * _c_unsigned(-2.0 * x))[:, None]
    xb, ab = x[:, None], a[:, None]
    return _integrate(lambda z: form_coefficients(xb, ab, z, c), list(paths), len(x), tol)


# -- representations ---------------------------------------------------------

@dataclass
class MonodromyRep:
    M_A: np.ndarray
    M_B: np.ndarray
    punctures: tuple = field(default_factory=tuple)  # P_0, P_1, P_i, P_{1+i}
    connector: np.ndarray | None = None
    basepoint: complex = Z0

    def matrices(self):
        return [self.M_A, self.M_B, *self.punctures]

    def conjugated(self, g) -> "MonodromyRep":
        gi = np.linalg.inv(g)
        f = lambda m: g @ m @ gi
        return MonodromyRep(f(self.M_A), f(self.M_B), tuple(f(p) for p in self.punctures),
                            None if self.connector is None else self.connector @ gi, self.basepoint)

    def relation_residual(self) -> float:
        """Max-norm mismatch of the punctured-torus relation (see module doc)."""
        if not self.punctures or self.connector is None:
            raise ValueError("puncture loops were not computed")
        A, B = self.M_A, self.M_B
        comm = np.linalg.inv(B) @ np.linalg.inv(A) @ B @ A
        C = self.connector
        lhs = np.linalg.inv(C) @ comm @ C
        P0, P1, Pi, P1i = self.punctures
        rhs = P0 @ Pi @ P1i @ P1
        return float(np.abs(lhs - rhs).max())


def torus_monodromy(p: AffineConnCoord, tol: float = DEFAULT_TOL, punctures: bool = True) -> MonodromyRep:
    form = build_form(p)
    MA = transport(form, period_path(1), tol)
    MB = transport(form, period_path(1j), tol)
    if not punctures:
        return MonodromyRep(MA, MB)
    P = tuple(transport(form, lollipop(q), tol) for q in PUNCTURES)
    C = transport(form, CONNECTOR, tol)
    return MonodromyRep(MA, MB, P, C)


def period_monodromy_batch(x, a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """(M_A, M_B) for each (x_k, a_k); shape (k, 2, 2, 2)."""
    return transport_batch(x, a, [period_path(1), period_path(1j)], tol)


def abelian_monodromy(p: AffineConnCoord):
    """Holonomies of d + pi a dz - pi x dz̄ along z -> z+2 and z -> z+2i.

    With Y' = -A Y the holonomy is exp(-integral): along 2 the form
    integrates to 2 pi (a - x), along 2i to 2 pi i (a + x).
    """
    return (complex(np.exp(-2 * np.pi * (p.a - p.x))), complex(np.exp(-2j * np.pi * (p.a + p.x))))


def _is_reducible(MA, MB, tol=IRREDUCIBLE_TOL):
    K = MA @ MB @ np.linalg.inv(MA) @ np.linalg.inv(MB)
    I = np.eye(2)
    return min(np.abs(K - I).max(), np.abs(K + I).max()) < tol


def unitarity_defect(rep: MonodromyRep):
    """(Im tr M_A, Im tr M_B); raises ReducibleError on reducible pairs."""
    if _is_reducible(rep.M_A, rep.M_B):
        raise ReducibleError("trace criterion is not valid for a reducible pair")
    return float(np.trace(rep.M_A).imag), float(np.trace(rep.M_B).imag)


def fricke(tA, tB, tAB):
    return tA**2 + tB**2 + tAB**2 - tA * tB * tAB - 4.0


def su2_realizable(rep: MonodromyRep, tol: float = 1e-6) -> bool:
    """Trace test for conjugacy of the pair (M_A, M_B) into SU(2)."""
    tA, tB = np.trace(rep.M_A), np.trace(rep.M_B)
    tAB = np.trace(rep.M_A @ rep.M_B)
    if max(abs(tA.imag), abs(tB.imag), abs(tAB.imag)) > tol:
        return False
    tA, tB, tAB = tA.real, tB.real, tAB.real
    if max(abs(tA), abs(tB), abs(tAB)) > 2.0 + tol:
        return False
    return fricke(tA, tB, tAB) <= tol
