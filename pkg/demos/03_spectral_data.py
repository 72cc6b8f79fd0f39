# Solving for the spectral data: coarse, then refined.
import numpy as np

from lawson_spectral.cli import load_spectral
from lawson_spectral.spectral_solver import (
    area,
    c_minus1,
    closing_distance,
    default_guess,
    reality_residual,
    solve_spectral,
)
from lawson_spectral.unitarizer import AuCache

cache = AuCache()
d, rep = solve_spectral(default_guess(2), n_points=16, cache=cache)
print(f"N=2: {rep.iterations} steps, residual {rep.residual_history[-1]:.1e}, reality {rep.reality_max:.1e}")
print(f"     area {area(d):.6f}, c_-1 {c_minus1(d):.6f}, closing {closing_distance(d):.1e}")

for n_trunc, quad in ((4, 64), (8, 256)):
    d, rep = solve_spectral(d.resized(n_trunc), n_points=16, cache=cache, quad_nodes=quad)
    print(f"N={n_trunc}: reality {rep.reality_max:.1e}, area {area(d):.6f}, closing {closing_distance(d):.1e}")

# the shipped N=32 data, from configs/lawson_n32.ini
ref = load_spectral()
print(f"N=32: reality {np.abs(reality_residual(ref, 32)).max():.1e}, area {area(ref):.6f}")
print("x coefficients decay:", " ".join(f"{abs(c):.0e}" for c in ref.x_coeffs[::4]))
