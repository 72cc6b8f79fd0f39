# The coefficient a^u(x) that makes the torus monodromy unitarizable.
import numpy as np

from lawson_spectral.unitarizer import a_tilde, extract_b, grid_points, solve_au, solve_au_grid

x = 0.13 + 0.07j
s = solve_au(x)
print(f"a^u({x}) = {s.a_u:.12f}  defect {s.defect_norm:.1e}  in SU(2): {s.su2_ok}")

# odd, and shifted along with x
print("a^u(-x) + a^u(x)       =", solve_au(-x).a_u + s.a_u)
print("a^u(x+1/2) - a^u(x)    =", solve_au(x + 0.5).a_u - s.a_u)
print("a^u(x+i/2) - a^u(x)    =", solve_au(x + 0.5j).a_u - s.a_u)

# simple pole at 0 with residue 1/(12 pi)
for e in (1e-2, 5e-3, 2.5e-3):
    print(f"eps {e:.1e}: eps a^u(eps) = {(e * solve_au(e).a_u).real:.10f}")
print("1/(12 pi)               =", 1 / (12 * np.pi))

# a^u minus the explicit part is smooth and periodic
d = extract_b(x, s)
print("a_tilde =", d.a_tilde, " b =", d.b, " b(x+1/2) =", extract_b(x + 0.5).b)

# the whole cell at once
xs = grid_points(6)
samples = solve_au_grid(xs)
print(len(samples), "grid points, worst defect", max(t.defect_norm for t in samples))
