"""Loops of 2x2 matrices sampled on the unit circle.

Iwasawa splitting  Psi = F B  with F unitary on the circle and B the boundary
value of a map holomorphic in the disc whose value at 0 is upper triangular
with positive diagonal.  Since Psi* Psi = B* B on the circle, B is a
spectral factor of the positive loop H = Psi* Psi.  One pass solves the
block Toeplitz system for X = sum_{k<=0} X_k lambda^k with X_0 = Id and
X H free of negative modes; the product X H is B up to a constant fixed by a
Cholesky factorization at 0.  Further passes factor F* F the same way and fold
the correction into B, projecting B onto non-negative modes each time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve as dense_solve

DEFAULT_NODES = 64
DEFAULT_MODES = 16


class IwasawaError(RuntimeError):
    pass


def circle_nodes(n=DEFAULT_NODES):
    return np.exp(2j * np.pi * np.arange(n) / n)


@dataclass
class LoopSample:
    lambda_nodes: np.ndarray
    frames: np.ndarray  # (n, 2, 2)

    def __post_init__(self):
        n = len(self.lambda_nodes)
        if n & (n - 1) or n < 4:
            raise ValueError("node count must be a power of two")
        if not np.allclose(self.lambda_nodes, circle_nodes(n), atol=1e-12):
            raise ValueError("nodes must be exp(2 pi i j / n)")

    @classmethod
    def from_function(cls, f, n=DEFAULT_NODES):
        lam = circle_nodes(n)
        return cls(lam, np.array([f(l) for l in lam]))

    def det_defect(self):
        return float(np.abs(np.linalg.det(self.frames) - 1).max())


def fourier_modes(samples):
    """Coefficients c_k with samples_j = sum_k c_k lambda_j^k, k in fft order."""
    return np.fft.fft(samples, axis=0) / samples.shape[0]


def _mode(c, k):
    return c[k % c.shape[0]]


def positive_factor(H, modes=DEFAULT_MODES):
    """B on the nodes with B* B = H, B in the plus class, B(0) upper positive."""
    n = H.shape[0]
    m = min(modes, n // 2 - 1)
    c = fourier_modes(H)
    # unknowns X_{-1..-m}; equations: negative modes -1..-m of X H vanish
    T = np.zeros((2 * m, 2 * m), complex)
    rhs = np.zeros((2 * m, 2), complex)
    for r, k in enumerate(range(-1, -m - 1, -1)):
        rhs[2 * r:2 * r + 2] = -_mode(c, k).T
        for s, j in enumerate(range(-1, -m - 1, -1)):
            # (X_j H_{k-j}) transposed: H_{k-j}^T X_j^T
            T[2 * r:2 * r + 2, 2 * s:2 * s + 2] = _mode(c, k - j).T
    XT = dense_solve(T, rhs)
    lam = circle_nodes(n)
    X = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    for s, j in enumerate(range(-1, -m - 1, -1)):
        X += XT[2 * s:2 * s + 2].T[None] * (lam ** j)[:, None, None]
    P = project_plus(X @ H)
    P0 = fourier_modes(P)[0]
    P0 = (P0 + P0.conj().T) / 2
    L = np.linalg.cholesky(P0)
    return np.linalg.solve(L, P)


def plus_value(samples, mu):
    """Evaluate at ``mu`` the non-negative-mode part of a sampled loop."""
    c = fourier_modes(samples)
    n = c.shape[0]
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    powers = mu[:, None] ** np.arange(n // 2)[None, :]
    return np.tensordot(powers, c[: n // 2], axes=(1, 0))


def project_plus(samples):
    """Drop negative Fourier modes (and the Nyquist mode)."""
    n = samples.shape[0]
    c = np.fft.fft(samples, axis=0)
    c[n // 2:] = 0
    return np.fft.ifft(c, axis=0)


def unitary_defect(F):
    eye = np.eye(2)
    return float(np.abs(np.conj(np.swapaxes(F, -1, -2)) @ F - eye).max())


@dataclass
class IwasawaResult:
    F: np.ndarray
    B: np.ndarray
    reconstruction_residual: float
    unitary_residual: float
    iterations: int
    tail: float

    @property
    def B0(self):
        return fourier_modes(self.B)[0]


def negative_tail(frames, modes=DEFAULT_MODES):
    """Relative size of the Fourier modes beyond +-modes."""
    c = fourier_modes(frames)
    n = c.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    big = np.abs(c).max()
    outside = np.abs(c[np.abs(k) > modes]).max() if np.any(np.abs(k) > modes) else 0.0
    return float(outside / big)


def unitarize_loop(s: LoopSample | np.ndarray, modes=None, tol=1e-13, max_iter=20,
                   tail_limit=1e-6, tail_modes=DEFAULT_MODES) -> IwasawaResult:
    """Iwasawa splitting of a sampled loop; see module docstring.

    ``modes`` is the Toeplitz truncation, n/2 - 1 by default: fewer modes
    leave an aliasing error that the correction passes only shrink linearly.
    The tail check asks that modes beyond ``tail_modes`` be below ``tail_limit``.
    """
    Psi = s.frames if isinstance(s, LoopSample) else np.asarray(s, dtype=complex)
    if np.any(np.abs(np.linalg.det(Psi)) < 1e-14):
        raise IwasawaError("loop is not invertible at every node")
    modes = Psi.shape[0] // 2 - 1 if modes is None else modes
    tail = negative_tail(Psi, tail_modes)
    if tail > tail_limit:
        raise IwasawaError(f"Fourier tail {tail:.1e} above {tail_limit:.0e}; refine the loop sampling")
    herm = lambda M: np.conj(np.swapaxes(M, -1, -2))
    B = positive_factor(herm(Psi) @ Psi, modes)
    F = Psi @ np.linalg.inv(B)
    it = 0
    for it in range(1, max_iter + 1):
        err = unitary_defect(F)
        if err < tol:
            break
        C = positive_factor(herm(F) @ F, modes)
        B = project_plus(C @ B)
        B0 = fourier_modes(B)[0]
        # keep B(0) upper triangular with positive diagonal
        q, r = np.linalg.qr(B0)
        q = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
        B = q.conj().T[None] @ B
        F = Psi @ np.linalg.inv(B)
    rec = float(np.abs(F @ B - Psi).max())
    return IwasawaResult(F, B, rec, unitary_defect(F), it, tail)


# -- dressing ----------------------------------------------------------------

def line_projector(v):
    v = np.asarray(v, dtype=complex).reshape(2)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def dressing_scalar(lam, lambda_0):
    lam = np.asarray(lam, dtype=complex)
    l0 = complex(lambda_0)
    if l0 == 0:
        return lam.copy()
    r = 1 / np.conj(l0)
    # same product order in both factors so that s(1) == 1 exactly
    return ((1 - r) * (lam - l0)) / ((1 - l0) * (lam - r))


def dressing_matrix(lam, lambda_0, line):
    """Simple factor pi_L + s(lambda) pi_{L perp}."""
    if abs(abs(lambda_0) - 1) < 1e-12:
        raise ValueError("lambda_0 on the unit circle makes the dressing factor degenerate")
    P = line_projector(line)
    Q = np.eye(2) - P
    s = dressing_scalar(lam, lambda_0)
    return P + np.asarray(s)[..., None, None] * Q


def simple_factor_dress(frames, lambda_nodes, lambda_0, line):
    """Multiply each node frame by the dressing factor."""
    return dressing_matrix(lambda_nodes, lambda_0, line) @ frames


def eigenline(M, which=0):
    """Unit eigenvector of M; ``which`` picks by ascending |eigenvalue|."""
    w, V = np.linalg.eig(M)
    k = np.argsort(np.abs(w))[which]
    return V[:, k] / np.linalg.norm(V[:, k])


# -- frames near branch points -------------------------------------------------

@dataclass(frozen=True)
class GluingFrame:
    """t1 = s1 - (z/2) s2,  t2 = s1 + (z/2) s2, as [t1 t2] = [s1 s2] G(z)."""

    def matrix(self, z):
        z = complex(z)
        return np.array([[1, 1], [-z / 2, z / 2]], complex)

    def inverse(self, z):
        z = complex(z)
        if z == 0:
            raise ZeroDivisionError("the gluing frame degenerates at the branch point")
        return np.array([[0.5, -1 / z], [0.5, 1 / z]], complex)

    def det(self, z):
        return complex(z)
