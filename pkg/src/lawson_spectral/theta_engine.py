"""Theta function of the square torus and the sections built from it.

The function realized here is

    theta(z) = exp(i pi z) * theta_1(z | tau=i)

with theta_1 the odd Jacobi series in the nome q = exp(-pi).  It is entire,
vanishes simply on Z + iZ and nowhere else, and obeys

    theta(z + 1) = theta(z)
    theta(z + i) = theta(z) * exp(-2 pi i (z - (1+i)/2) + pi)
    theta(-z)    = theta(z + i)

Everything is vectorized over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOME = float(np.exp(-np.pi))
DEFAULT_TERMS = 12
POLE_RADIUS = 1e-3


class PoleError(ValueError):
    """Raised when a meromorphic quantity is evaluated too close to a pole."""


def lattice_distance(z, period=1.0):
    """Distance from z to the nearest point of period*(Z + iZ)."""
    w = np.asarray(z, dtype=complex) / period
    d = w - (np.round(w.real) + 1j * np.round(w.imag))
    return np.abs(d) * period


@dataclass(frozen=True)
class ThetaFn:
    truncation_order: int = DEFAULT_TERMS
    nome: float = NOME

    def __post_init__(self):
        if self.truncation_order < 1:
            raise ValueError("truncation_order must be at least 1")

    def _tables(self):
        n = np.arange(self.truncation_order)
        k = 2 * n + 1
        # 2 (-1)^n q^{(n+1/2)^2}
        w = 2.0 * (-1.0) ** n * self.nome ** ((n + 0.5) ** 2)
        return k.astype(float), w

    def _theta1(self, z):
        k, w = self._tables()
        arg = np.pi * np.multiply.outer(z, k)
        return np.sin(arg) @ w, (np.cos(arg) * (np.pi * k)) @ w

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        t1, _ = self._theta1(z)
        out = np.exp(1j * np.pi * z) * t1
        return out[()] if out.ndim == 0 else out

    def prime(self, z):
        z = np.asarray(z, dtype=complex)
        t1, dt1 = self._theta1(z)
        out = np.exp(1j * np.pi * z) * (1j * np.pi * t1 + dt1)
        return out[()] if out.ndim == 0 else out

    def both(self, z):
        """(theta(z), theta'(z)) sharing one series evaluation."""
        z = np.asarray(z, dtype=complex)
        t1, dt1 = self._theta1(z)
        e = np.exp(1j * np.pi * z)
        return e * t1, e * (1j * np.pi * t1 + dt1)


_DEFAULT = ThetaFn()


def theta(z, fn: ThetaFn = _DEFAULT):
    return fn(z)


def theta_prime(z, fn: ThetaFn = _DEFAULT):
    """Analytic derivative, summed term by term."""
    return fn.prime(z)


def quasi_period_factor(z):
    """theta(z + i) / theta(z)."""
    z = np.asarray(z, dtype=complex)
    return np.exp(-2j * np.pi * (z - (1 + 1j) / 2) + np.pi)


def bundle_section(x, z, fn: ThetaFn = _DEFAULT, pole_radius=POLE_RADIUS):
    """s(z) = theta(z - x)/theta(z) * exp(pi x (conj z - z)).

    Doubly periodic on Z + iZ with dbar s = pi x s.  Raises PoleError within
    ``pole_radius`` of the lattice.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(lattice_distance(z) < pole_radius):
        raise PoleError("section evaluated inside the pole exclusion radius")
    out = fn(z - x) / fn(z) * np.exp(np.pi * x * (np.conj(z) - z))
    return out[()] if np.ndim(out) == 0 else out


def invariant_suite(fn: ThetaFn = _DEFAULT, points=100, seed=0, tol=1e-12):
    """Residuals of the period relations, zero set and parity on random points.

    Returns {name: (value, passed)}.  Period residuals are relative to
    max(1, |theta(z)|) so the growth of theta in the imaginary direction
    does not swamp them.
    """
    if points < 1:
        raise ValueError("need at least one test point")
    rng = np.random.default_rng(seed)
    z = rng.uniform(0, 2, points) + 1j * rng.uniform(0, 2, points)
    t = fn(z)
    scale = np.maximum(1.0, np.abs(t))
    lattice = np.array([0, 1, 1j, 1 + 1j])
    checks = {
        "period_1": float((np.abs(fn(z + 1) - t) / scale).max()),
        "period_i": float((np.abs(fn(z + 1j) - t * quasi_period_factor(z)) / (scale * np.abs(quasi_period_factor(z)))).max()),
        "parity": float((np.abs(fn(-z) - fn(z + 1j)) / np.maximum(1.0, np.abs(fn(z + 1j)))).max()),
        "lattice_zeros": float(np.abs(fn(lattice)).max()),
    }
    out = {k: (v, v < tol) for k, v in checks.items()}
    dmin = float(np.abs(fn.prime(lattice)).min())
    out["lattice_derivative"] = (dmin, dmin > 0.1)
    return out
