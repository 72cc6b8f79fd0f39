"""Coordinates on line-bundle moduli over the square torus C/(2Z + 2iZ).

A holomorphic structure is dbar_0 - pi x dz̄ and a flat connection is
d + pi a dz - pi x dz̄.  The half lattice

    HALF = (1/2) Z + (i/2) Z

acts on x alone (holomorphic structures) and on pairs by the coupled shifts
(x, a) -> (x + 1/2, a + 1/2) and (x, a) -> (x + i/2, a - i/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF = 0.5
_TIE = 1e-12

#: fixed points of x -> -x modulo the half lattice
BRANCH_POINTS = (0.0 + 0.0j, 0.25 + 0.0j, 0.25j, 0.25 + 0.25j)


def _reduce_real(u):
    r = np.mod(u, HALF)
    # snap values a hair below 1/2 to 0, so ties always go toward the origin
    return np.where(HALF - r < _TIE, 0.0, np.where(r < _TIE, 0.0, r))


def reduce(x):
    """Representative of x in the cell [0, 1/2) x [0, 1/2) i."""
    x = np.asarray(x, dtype=complex)
    out = _reduce_real(x.real) + 1j * _reduce_real(x.imag)
    return out[()] if out.ndim == 0 else out


def lattice_offset(x):
    """The half-lattice vector taking reduce(x) back to x, as (m, n) integers."""
    x = complex(x)
    r = complex(reduce(x))
    return int(round((x.real - r.real) / HALF)), int(round((x.imag - r.imag) / HALF))


def half_lattice_distance(x):
    """Distance from x to the nearest point of the half lattice."""
    x = np.asarray(x, dtype=complex) / HALF
    d = x - (np.round(x.real) + 1j * np.round(x.imag))
    return np.abs(d) * HALF


def is_trivial_bundle(x, tol=1e-9):
    """True when x is congruent to 0 (no holomorphic connection exists there)."""
    return bool(np.all(half_lattice_distance(x) < tol))


@dataclass(frozen=True)
class JacobianCoord:
    x: complex

    def reduced(self) -> "JacobianCoord":
        return JacobianCoord(complex(reduce(self.x)))


@dataclass(frozen=True)
class AffineConnCoord:
    x: complex
    a: complex

    def shifted(self, m: int, n: int) -> "AffineConnCoord":
        """Apply m real and n imaginary coupled shifts."""
        return AffineConnCoord(self.x + HALF * (m + 1j * n), self.a + HALF * (m - 1j * n))

    def reduced(self) -> "AffineConnCoord":
        m, n = lattice_offset(self.x)
        return self.shifted(-m, -n)


@dataclass(frozen=True)
class ModuliClass:
    representative: complex

    @property
    def is_branch_point(self) -> bool:
        return any(abs(self.representative - b) < 1e-12 for b in BRANCH_POINTS)


def class_distance(p: AffineConnCoord, q: AffineConnCoord) -> float:
    """Smallest max-norm distance between q and a coupled translate of p."""
    dx = q.x - p.x
    m0, n0 = round(dx.real / HALF), round(dx.imag / HALF)
    best = np.inf
    for m in (m0 - 1, m0, m0 + 1):
        for n in (n0 - 1, n0, n0 + 1):
            s = p.shifted(m, n)
            best = min(best, max(abs(s.x - q.x), abs(s.a - q.a)))
    return float(best)


def class_equal(p: AffineConnCoord, q: AffineConnCoord, tol: float = 1e-9) -> bool:
    return class_distance(p, q) <= tol


def _lex_key(z: complex):
    return (round(z.real, 12), round(z.imag, 12))


def pi_project(x) -> ModuliClass:
    """Class of {x, -x}; stores the lexicographically smaller reduced point."""
    x = x.x if isinstance(x, JacobianCoord) else x
    u = complex(reduce(x))
    v = complex(reduce(-x))
    return ModuliClass(min(u, v, key=_lex_key))


def normalize_trivialization(t_coeff):
    """Coefficient t of dbar_0 + t dz̄  ->  x of dbar_0 - pi x dz̄."""
    return t_coeff / (-np.pi)


def denormalize_trivialization(x):
    return -np.pi * x
