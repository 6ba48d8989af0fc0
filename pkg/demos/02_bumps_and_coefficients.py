"""How a single bump changes the polynomials, seen through (A1, A2).

Writing (p_n, p_{n-1}) = T_n (A1, A2) with T_n the free transfer matrix, the
coefficient vector is constant between sites and jumps by (I + Phi) at each
one.  A bump of size v at site N changes p_n by -v p_{N-1} U_{n-N}.
"""
import numpy as np

from sparsejacobi.jacobi import JacobiParams, Rule, SparseSpec, eval_poly
from sparsejacobi.varparam import coeffs_from_poly, kappa, kappa_lower_bound, single_bump_update

spec = SparseSpec(Rule.power(0.5), (5, 40, 400))
params = JacobiParams(spec)
x = 0.7

# %% A_n only moves at the sites
for n in (1, 4, 5, 6, 39, 40, 41, 399, 400, 401, 5000):
    c = coeffs_from_poly(n, x, params)
    print(f"n={n:5d}  A1={c.A1:+.6f}  A2={c.A2:+.6f}")

# %% adding the third bump by hand
lower = params.at_level(2)
n = 1234
before = eval_poly(n, x, lower)
after = single_bump_update(before, spec.couplings[2], 400, x, eval_poly(399, x, lower).p_n)
print("closed-form update", after.p_n, " full recurrence", eval_poly(n, x, params).p_n)

# %% kappa never falls below (1 - |x|/2)(A1^2 + A2^2) at real x
for xx in np.linspace(-1.8, 1.8, 7):
    c = coeffs_from_poly(3000, float(xx), params)
    print(f"x={xx:+.1f}  |kappa|={abs(kappa(c, xx)):.4f}  bound={kappa_lower_bound(c, xx):.4f}")
