"""Meromorphic sl(2)-connection 1-forms on the square torus built from (x, a).

In the frame of eigenline sections the form reads

    [[ pi a dz - pi x dz̄ ,   g_minus dz           ],
     [ g_plus dz         ,  -pi a dz + pi x dz̄    ]]

with y = -2x and

    g_plus(z)  = c(y) theta(z - y)/theta(z) exp(-2 pi i y Im z)
    g_minus(z) = c(y) theta(z + y)/theta(z) exp(+2 pi i y Im z)

where c(y)^2 theta(y) theta(-y) = theta'(0)^2 / 36.  Both off-diagonal
entries are Z + iZ periodic with simple poles on the lattice, and the
product g_plus g_minus has double poles with leading coefficient 1/36.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .moduli_space import AffineConnCoord, is_trivial_bundle
from .theta_engine import POLE_RADIUS, PoleError, ThetaFn, lattice_distance

_TH = ThetaFn()
_THETA_PRIME_0 = complex(_TH.prime(0.0))
C_BASE_POINT = 0.3


class DegenerateInputError(ValueError):
    """Input lies on a locus where the construction does not exist."""


def _c_unsigned(y):
    # theta(-y) = -exp(-2 pi i y) theta(y), so the square root has the
    # single-valued closed form  (i/6) theta'(0) exp(i pi y) / theta(y)
    y = np.asarray(y, dtype=complex)
    return (1j / 6.0) * _THETA_PRIME_0 * np.exp(1j * np.pi * y) / _TH(y)


def _base_sign():
    y0 = C_BASE_POINT
    principal = np.sqrt(_THETA_PRIME_0**2 / (_TH(y0) * _TH(-y0))) / 6.0
    u = _c_unsigned(y0)
    return 1.0 if abs(u - principal) < abs(u + principal) else -1.0


C_SIGN = _base_sign()


def coeff_c(y, pole_radius=POLE_RADIUS):
    """Normalization constant c(y), continued from the principal branch at 0.3."""
    y = np.asarray(y, dtype=complex)
    if np.any(lattice_distance(y) < pole_radius):
        raise PoleError("c(y) evaluated at a lattice point")
    out = C_SIGN * _c_unsigned(y)
    return out[()] if out.ndim == 0 else out


def gamma_pair(y, z, pole_radius=POLE_RADIUS):
    """(g_plus(z), g_minus(z)) as dz coefficients."""
    z = np.asarray(z, dtype=complex)
    if np.any(lattice_distance(z) < pole_radius):
        raise PoleError("off-diagonal entries evaluated at a pole")
    c = coeff_c(y, pole_radius)
    return _gamma_unchecked(y, c, z)


def _gamma_unchecked(y, c, z):
    tz = _TH(z)
    ph = np.exp(-2j * np.pi * y * z.imag)
    gp = c * _TH(z - y) / tz * ph
    gm = c * _TH(z + y) / tz / ph
    return gp, gm


def form_coefficients(x, a, z, c=None):
    """dz and dz̄ matrices of the connection form, broadcast over x, a, z.

    Returns arrays of shape broadcast(x, a, z).shape + (2, 2).  No pole check.
    """
    x = np.asarray(x, dtype=complex)
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    y = -2.0 * x
    if c is None:
        c = C_SIGN * _c_unsigned(y)
    gp, gm = _gamma_unchecked(y, c, z)
    shape = np.broadcast_shapes(x.shape, a.shape, z.shape)
    dz = np.empty(shape + (2, 2), dtype=complex)
    pa = np.broadcast_to(np.pi * a, shape)
    dz[..., 0, 0] = pa
    dz[..., 1, 1] = -pa
    dz[..., 0, 1] = np.broadcast_to(gm, shape)
    dz[..., 1, 0] = np.broadcast_to(gp, shape)
    dzb = np.zeros(shape + (2, 2), dtype=complex)
    px = np.broadcast_to(np.pi * x, shape)
    dzb[..., 0, 0] = -px
    dzb[..., 1, 1] = px
    return dz, dzb


@dataclass(frozen=True)
class MatrixOneForm:
    """A 2x2 trace-free 1-form given by pointwise dz and dz̄ coefficients."""

    x: complex
    a: complex
    c: complex
    pole_set: tuple = (0j,)
    pole_period: float = 1.0
    pole_radius: float = POLE_RADIUS

    def _check(self, z):
        if self.pole_set and np.any(lattice_distance(z, self.pole_period) < self.pole_radius):
            raise PoleError("connection form evaluated at a pole")

    def dz_part(self, z):
        z = np.asarray(z, dtype=complex)
        self._check(z)
        return form_coefficients(self.x, self.a, z, self.c)[0]

    def dzbar_part(self, z):
        z = np.asarray(z, dtype=complex)
        return form_coefficients(self.x, self.a, z, self.c)[1]

    def along(self, z, dz):
        """A(z)(dz) = A_dz * dz + A_dzbar * conj(dz)."""
        z = np.asarray(z, dtype=complex)
        self._check(z)
        p, q = form_coefficients(self.x, self.a, z, self.c)
        dz = np.asarray(dz, dtype=complex)[..., None, None]
        return p * dz + q * np.conj(dz)


@dataclass(frozen=True)
class DiagonalForm:
    """The abelian part d + pi a dz - pi x dz̄ placed on the diagonal."""

    x: complex
    a: complex
    pole_set: tuple = ()

    def along(self, z, dz):
        z = np.asarray(z, dtype=complex)
        dz = np.asarray(dz, dtype=complex)
        w = np.pi * self.a * dz - np.pi * self.x * np.conj(dz)
        out = np.zeros(np.broadcast_shapes(z.shape, dz.shape) + (2, 2), dtype=complex)
        out[..., 0, 0] = w
        out[..., 1, 1] = -w
        return out


def build_form(p: AffineConnCoord) -> MatrixOneForm:
    if is_trivial_bundle(p.x):
        raise DegenerateInputError("x is congruent to 0: no such connection exists")
    y = -2.0 * p.x
    return MatrixOneForm(complex(p.x), complex(p.a), complex(coeff_c(y)))


def contour_residue(f, center=0.0, radius=0.05, nodes=256, weight=None):
    """(1/2 pi i) * contour integral of f(z) * weight(z - center) dz on a circle.

    Trapezoid rule, spectrally accurate for functions analytic on an annulus.
    """
    phi = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * phi)
    vals = f(center + w)
    if weight is not None:
        vals = vals * weight(w)
    # dz = i w dphi  ->  (1/2 pi i) sum f i w (2 pi / n) = mean(f w)
    return complex(np.mean(vals * w))


def product_residue(y, radius=0.05, nodes=256):
    """Coefficient of 1/z^2 in g_plus g_minus at the origin."""
    c = coeff_c(y)
    return contour_residue(
        lambda z: np.prod(_gamma_unchecked(y, c, z), axis=0),
        radius=radius, nodes=nodes, weight=lambda w: w,
    )


@dataclass(frozen=True)
class ExceptionalFamily:
    """t dz̄ + (sign pi/(12 t) + t e(t)) dz with e(t) = sum_k e_k t^(2k).

    Only even powers go into e so the full dz coefficient is odd in t.
    """

    sign: int = -1
    e_coeffs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @property
    def pole_coefficient(self) -> float:
        return self.sign * np.pi / 12.0

    def e(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.zeros_like(t)
        for k, ek in enumerate(self.e_coeffs):
            out = out + ek * t ** (2 * k)
        return out


@dataclass(frozen=True)
class AbelianOneForm:
    dzbar: complex
    dz: complex


def exceptional_form(fam: ExceptionalFamily, t) -> AbelianOneForm:
    t = complex(t)
    if t == 0:
        raise PoleError("the exceptional family has a pole at t = 0")
    return AbelianOneForm(t, fam.pole_coefficient / t + t * complex(fam.e(t)))
