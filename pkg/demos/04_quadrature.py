"""Gauss quadrature from the truncated matrix and the spectral measure.

The n x n truncation has eigenvalues x_k and first eigenvector components
u_k; the discrete measure sum u_k^2 delta_{x_k} matches the spectral measure
on polynomials of degree < 2n.  For the free matrix the weights approach the
semicircle density.
"""
import numpy as np

from sparsejacobi.harness import quadrature_approx
from sparsejacobi.jacobi import JacobiParams, Rule, SparseSpec, free_params

nodes, weights = quadrature_approx(5, free_params())
print("free n=5 nodes", np.round(nodes, 12))
print("closed form   ", np.round(np.sort(2 * np.cos(np.arange(1, 6) * np.pi / 6)), 12))

# %% moments: sum w = 1, sum w x = b_1, sum w x^2 = a_1^2 + b_1^2
params = JacobiParams(SparseSpec(Rule.power(0.5), (4, 16, 153)))
x, w = quadrature_approx(2000, params)
print("moments", w.sum(), (w * x).sum(), (w * x * x).sum())

# %% weights per unit length versus the free density sqrt(4 - x^2) / (2 pi)
x0, w0 = quadrature_approx(2000, free_params())
mid = len(x0) // 2
density = w0[mid] / (x0[mid + 1] - x0[mid])
print("free density at 0", density, "semicircle", np.sqrt(4.0) / (2 * np.pi))
