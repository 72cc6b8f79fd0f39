# Theta function, the rank-2 connection on the torus, and its monodromy.
import numpy as np

from lawson_spectral.abelian_connection import build_form, product_residue
from lawson_spectral.monodromy import abelian_monodromy, torus_monodromy
from lawson_spectral.moduli_space import AffineConnCoord
from lawson_spectral.theta_engine import ThetaFn, invariant_suite, theta

# the invariants of theta at 12 terms, then at 2 terms
for terms in (12, 2):
    res = invariant_suite(ThetaFn(terms))
    print(terms, "terms:", {k: f"{v:.1e}" for k, (v, _) in res.items()})

print("theta(0.3+0.4i) =", theta(0.3 + 0.4j))

# the off-diagonal entries multiply to a double pole with coefficient 1/36
for y in (0.3 + 0.2j, 0.1 - 0.35j):
    print("residue at", y, "=", product_residue(y), " 1/36 =", 1 / 36)

# the closing point: both abelian holonomies are -1
print("closing holonomies:", abelian_monodromy(AffineConnCoord(-(1 + 1j) / 4, (-1 + 1j) / 4)))

# a generic point: periods and the punctured-torus relation
p = AffineConnCoord(0.13 + 0.07j, 0.2 - 0.1j)
rep = torus_monodromy(p)
print("tr M_A =", np.trace(rep.M_A), " tr M_B =", np.trace(rep.M_B))
print("relation residual:", rep.relation_residual())
print("dz part at 0.4+0.3i:\n", build_form(p).dz_part(0.4 + 0.3j))
