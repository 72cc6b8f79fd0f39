"""The unitarizing coefficient a^u(x).

For each holomorphic structure x there is one diagonal coefficient a making
the torus connection unitarizable.  It is found by Gauss-Newton on the
imaginary parts of tr M_A, tr M_B and tr M_A M_B, each divided by
max(1, |tr|).  Two of those would make the system square, but on symmetric
lines (x real, for one) tr M_A and tr M_B are real for every real a and the
two-equation system loses rank; the third trace removes that degeneracy.

The explicit predictor

    ã(x) = (L(2x) - L(-2x)) / (12 pi) + x/3 + 2 conj(x)/3,   L = theta'/theta

has the same pole 1/(12 pi x) and the same shift equations, so b = a^u - ã is
smooth and periodic and ã is a good starting guess everywhere.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .monodromy import (
    DEFAULT_TOL as TRANSPORT_TOL,
    MonodromyRep,
    period_monodromy_batch,
    su2_realizable,
)
from .moduli_space import AffineConnCoord, HALF, half_lattice_distance, is_trivial_bundle, lattice_offset, reduce
from .abelian_connection import DegenerateInputError
from .theta_engine import PoleError, ThetaFn, lattice_distance

_TH = ThetaFn()
FD_STEP = 1e-6
NEWTON_TOL = 1e-11
MAX_ITER = 30
ACCEPT_TOL = 1e-7


class ConvergenceError(RuntimeError):
    pass


def _log_derivative(w):
    t, d = _TH.both(w)
    return d / t


def a_tilde(x):
    x = np.asarray(x, dtype=complex)
    if np.any(lattice_distance(2 * x) < 1e-12):
        raise PoleError("a_tilde has a pole where 2x is a lattice point")
    out = (_log_derivative(2 * x) - _log_derivative(-2 * x)) / (12 * np.pi) + x / 3 + 2 * np.conj(x) / 3
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class AuSample:
    x: complex
    a_u: complex
    defect_norm: float
    su2_ok: bool
    iterations: int = 0


@dataclass(frozen=True)
class TildeDecomposition:
    a_tilde: complex
    b: complex

    @property
    def a_u(self):
        return self.a_tilde + self.b


def _scaled_traces(M):
    """Traces of M_A, M_B, M_A M_B and the per-trace scale."""
    MA, MB = M[..., 0, :, :], M[..., 1, :, :]
    tr = np.stack([np.trace(MA, axis1=-2, axis2=-1),
                   np.trace(MB, axis1=-2, axis2=-1),
                   np.trace(MA @ MB, axis1=-2, axis2=-1)], axis=-1)
    return tr, np.maximum(1.0, np.abs(tr))


def trace_defect(x, a, tol=TRANSPORT_TOL):
    """Scaled (Im tr M_A, Im tr M_B, Im tr M_A M_B), batched over x, a."""
    tr, s = _scaled_traces(period_monodromy_batch(x, a, tol))
    return tr.imag / s


def solve_au_batch(xs, guesses=None, tol=NEWTON_TOL, max_iter=MAX_ITER, step=FD_STEP,
                   transport_tol=TRANSPORT_TOL, strict=True, accept=ACCEPT_TOL):
    """Solve for a^u at every x in ``xs`` with one joint ODE batch per sweep.

    A point stops when its defect drops below ``tol`` or the Newton step
    stalls at roundoff; the best iterate is kept.  With ``strict`` a final
    defect above ``accept`` raises ConvergenceError.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    if np.any(half_lattice_distance(xs) < 1e-9):
        raise DegenerateInputError("x congruent to 0 has no unitarizing coefficient")
    a = np.array(a_tilde(xs) if guesses is None else guesses, dtype=complex).reshape(xs.shape)
    n = len(xs)
    active = np.ones(n, bool)
    best = np.full(n, np.inf)
    best_a = a.copy()
    best_M = [None] * n
    iters = np.zeros(n, int)
    for it in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = np.repeat(xs[idx], 3)
        aa = (a[idx][:, None] + np.array([0, step, -step])[None, :]).ravel()
        M = period_monodromy_batch(xa, aa, transport_tol).reshape(idx.size, 3, 2, 2, 2)
        tr, s = _scaled_traces(M)
        s0 = s[:, 0, :]
        F = tr[:, 0, :].imag / s0
        dt = (tr[:, 1, :] - tr[:, 2, :]) / (2 * step) / s0
        for j, k in enumerate(idx):
            r = np.abs(F[j]).max()
            if r < best[k]:
                best[k], best_a[k], best_M[k] = r, a[k], M[j, 0]
            if r < tol or it == max_iter:
                active[k] = False
                continue
            # traces are holomorphic in a: d Im tr / d Re a = Im t', d / d Im a = Re t'
            J = np.stack([dt[j].imag, dt[j].real], axis=1)
            d, *_ = np.linalg.lstsq(J, -F[j], rcond=None)
            da = d[0] + 1j * d[1]
            a[k] += da
            iters[k] = it + 1
            if abs(da) < 1e-12 * (1 + abs(a[k])):
                active[k] = False
    out = []
    for k in range(n):
        ok = su2_realizable(MonodromyRep(best_M[k][0], best_M[k][1]), tol=max(1e-7, 10 * best[k]))
        if strict and best[k] > accept:
            raise ConvergenceError(f"a^u did not converge at x={xs[k]} (defect {best[k]:.2e})")
        out.append(AuSample(complex(xs[k]), complex(best_a[k]), float(best[k]), bool(ok), int(iters[k])))
    return out


def solve_au(x, a_guess=None, tol=NEWTON_TOL, **kw) -> AuSample:
    x = x.x if hasattr(x, "x") else x
    if is_trivial_bundle(x):
        raise DegenerateInputError("x congruent to 0 has no unitarizing coefficient")
    return solve_au_batch([x], None if a_guess is None else [a_guess], tol, **kw)[0]


def extract_b(x, sample: AuSample | None = None) -> TildeDecomposition:
    x = x.x if hasattr(x, "x") else x
    if sample is None:
        sample = solve_au(x)
    at = complex(a_tilde(x))
    return TildeDecomposition(at, sample.a_u - at)


def au_from_reduced(x, a_reduced):
    """Carry a^u(reduce(x)) back to x with the coupled shift equations."""
    m, n = lattice_offset(x)
    return a_reduced + HALF * (m - 1j * n)


class AuCache:
    """a^u values keyed by the reduced point, rounded to ``digits``."""

    def __init__(self, digits=13, **solver_kw):
        self.digits = digits
        self.solver_kw = solver_kw
        self._store: dict = {}
        self.misses = 0

    def _key(self, r):
        return (round(r.real, self.digits), round(r.imag, self.digits))

    def __len__(self):
        return len(self._store)

    def evaluate(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=complex))
        r = np.asarray(reduce(xs), dtype=complex).reshape(xs.shape)
        missing = {}
        for v in r:
            k = self._key(v)
            if k not in self._store:
                missing.setdefault(k, v)
        if missing:
            pts = np.array(list(missing.values()))
            self.misses += len(pts)
            for k, smp in zip(missing, solve_au_batch(pts, **self.solver_kw)):
                self._store[k] = smp.a_u
        return np.array([au_from_reduced(x, self._store[self._key(v)]) for x, v in zip(xs, r)])


def continuation_order(xs):
    """Greedy nearest-neighbour ordering, starting from the point farthest from 0."""
    xs = list(np.asarray(xs, dtype=complex))
    if not xs:
        return []
    remaining = list(range(len(xs)))
    cur = max(remaining, key=lambda k: half_lattice_distance(xs[k]))
    order = [cur]
    remaining.remove(cur)
    while remaining:
        cur = min(remaining, key=lambda k: abs(xs[k] - xs[cur]))
        order.append(cur)
        remaining.remove(cur)
    return order


def solve_au_grid(xs, tol=NEWTON_TOL, **kw):
    """Batch solve with ã guesses; failures are retried along a continuation path."""
    xs = np.asarray(xs, dtype=complex)
    out = solve_au_batch(xs, tol=tol, strict=False, **kw)
    bad = [k for k, s in enumerate(out) if s.defect_norm > ACCEPT_TOL]
    if bad:
        order = continuation_order(xs)
        prev = None
        for k in order:
            if k in bad and prev is not None:
                guess = out[prev].a_u + (a_tilde(xs[k]) - a_tilde(xs[prev]))
                out[k] = solve_au_batch([xs[k]], [guess], tol=tol, strict=False, **kw)[0]
            if out[k].defect_norm <= ACCEPT_TOL:
                prev = k
    return out


def grid_points(n=12, exclusion=0.05):
    """Cell-centred n x n grid of [0,1/2)^2 minus discs around the half lattice."""
    u = (np.arange(n) + 0.5) * HALF / n
    X = (u[:, None] + 1j * u[None, :]).ravel()
    return X[half_lattice_distance(X) > exclusion]


AU_CSV_COLUMNS = ("re_x", "im_x", "re_au", "im_au", "defect", "su2_ok")


def au_table_csv(samples, extra_header=()) -> str:
    buf = io.StringIO()
    for line in extra_header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AU_CSV_COLUMNS)
    for s in samples:
        w.writerow([f"{s.x.real:.17g}", f"{s.x.imag:.17g}", f"{s.a_u.real:.17g}",
                    f"{s.a_u.imag:.17g}", f"{s.defect_norm:.3e}", str(s.su2_ok).lower()])
    return buf.getvalue()
