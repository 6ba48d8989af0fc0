"""Sine-kernel limit for the free Jacobi matrix.

With all diagonal entries zero the orthonormal polynomials are Chebyshev
polynomials of the second kind.  The normalised kernel
K_n(x + a/n, x + b/n) / K_n(x, x) approaches sin(r(b - a)) / (r(b - a)) with
r = 1/sqrt(4 - x^2); this script shows the error shrinking like 1/n.
"""
import numpy as np

from sparsejacobi.cdkernel import kernel_grid
from sparsejacobi.jacobi import free_params

# %% one point, one offset
params = free_params()
g = kernel_grid(0.0, 10_000, [(0.0, 1.0)], params)
print(f"ratio {g.ratio[0].real:.9f}  target {g.target[0]:.9f}")

# %% sup error over an 11 x 11 lattice of offsets
lattice = [(a, b) for a in np.linspace(-2, 2, 11) for b in np.linspace(-2, 2, 11)]
print(f"{'x':>5} " + " ".join(f"{'n=' + str(n):>10}" for n in (10**3, 10**4, 10**5)))
for x in (-1.5, -0.5, 0.0, 1.0):
    errs = [kernel_grid(x, n, lattice, params).abs_err.max() for n in (10**3, 10**4, 10**5)]
    print(f"{x:5.1f} " + " ".join(f"{e:10.2e}" for e in errs))

# %% the diagonal grows like n * 2/(4 - x^2); at x = 0 it is exactly ceil(n/2)
for n in (9, 10, 1001):
    print(n, kernel_grid(0.0, n, [(0.0, 0.0)], params).K_diag.real)
