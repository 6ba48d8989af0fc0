"""Variation-of-parameters coefficients for sparse perturbations of the free recurrence.

Writing ``(p_n, p_{n-1}) = T_n(z) (A1, A2)`` the coefficient vector only
changes at perturbation sites::

    A_{n+1} = (I + Phi_n) A_n,
    Phi_n   = -b_{n+1} [[psi1 psi2, psi2^2], [-psi1^2, -psi1 psi2]]   (at index n)

``Phi_n`` is rank one and nilpotent, so ``(I + Phi_n)^{-1} = I - Phi_n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chebyshev import chebyshev_u, transfer_entries, transfer_matrix
from .jacobi import JacobiParams, PolyPair, b_at, eval_poly, propagate


@dataclass(frozen=True)
class VarCoeffs:
    n: int
    A1: complex
    A2: complex
    z: complex
    level: int | str = "full"

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.A1, self.A2])

    @property
    def norm2(self) -> float:
        """``|A1|^2 + |A2|^2``."""
        return abs(self.A1) ** 2 + abs(self.A2) ** 2


@dataclass(frozen=True)
class PerturbStep:
    n: int
    Phi: np.ndarray


def coeffs_from_poly(n: int, z, params: JacobiParams, method: str = "recurrence") -> VarCoeffs:
    """Solve ``T_n(z) A = (p_n, p_{n-1})`` with the adjugate of ``T_n`` (its determinant is 1)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if method == "recurrence":
        pp = eval_poly(n, z, params)
        p, q = pp.p_n, pp.p_prev
    else:
        p, q = (complex(v[0]) for v in propagate(n, [z], params))
    T = transfer_matrix(n, z, method="trig").entries
    A1 = T[1, 1] * p - T[0, 1] * q
    A2 = -T[1, 0] * p + T[0, 0] * q
    return VarCoeffs(n, A1, A2, z, params.level)


def coeffs_batch(n: int, zs, params: JacobiParams):
    """``(A1, A2)`` arrays at index ``n`` for many points (gap-jump evaluation)."""
    zs = np.asarray(zs, dtype=complex)
    p, q = propagate(n, zs, params)
    t11, t12, t21, t22 = transfer_entries(n, zs)
    return t22 * p - t12 * q, -t21 * p + t11 * q


def coeffs_chain(n: int, zs, params: JacobiParams):
    """``A_n`` as the ordered product of ``I + Phi`` over the sites ``N_j <= n``.

    Equivalent to :func:`coeffs_batch` but never touches ``T_n`` itself, so
    it is the natural route for ``n`` far beyond the last site.
    """
    zs = np.asarray(zs, dtype=complex)
    A1, A2 = np.ones_like(zs), np.zeros_like(zs)
    for site, v in zip(params.sites, params.values):
        if site > n:
            break
        A1, A2 = _apply_step(site - 1, v, zs, A1, A2, sign=1.0)
    return A1, A2


def _phi_entries(k, b, z):
    u1 = chebyshev_u(k, z)
    u2 = -chebyshev_u(k - 1, z)
    return (-b * u1 * u2, -b * u2 * u2, b * u1 * u1, b * u1 * u2)


def _apply_step(k, b, z, A1, A2, sign):
    f11, f12, f21, f22 = _phi_entries(k, b, z)
    return A1 + sign * (f11 * A1 + f12 * A2), A2 + sign * (f21 * A1 + f22 * A2)


def phi_step(n: int, z, params: JacobiParams) -> PerturbStep:
    """``Phi_n(z)`` built from ``psi1_n, psi2_n`` and ``b_{n+1}``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    b = b_at(n + 1, params)
    if b == 0:
        dtype = complex if np.iscomplexobj(np.asarray(z)) else float
        return PerturbStep(n, np.zeros((2, 2), dtype=dtype))
    f11, f12, f21, f22 = _phi_entries(n, b, z)
    return PerturbStep(n, np.array([[f11, f12], [f21, f22]]))


def step_A(coeffs: VarCoeffs, params: JacobiParams, inverse: bool = False) -> VarCoeffs:
    """``A_{n+1} = (I + Phi_n) A_n``; with ``inverse`` go back, ``A_{n-1} = (I - Phi_{n-1}) A_n``."""
    k = coeffs.n - 1 if inverse else coeffs.n
    if k < 0:
        raise ValueError("cannot step below n = 0")
    new_n = coeffs.n - 1 if inverse else coeffs.n + 1
    b = b_at(k + 1, params)
    if b == 0:
        return VarCoeffs(new_n, coeffs.A1, coeffs.A2, coeffs.z, coeffs.level)
    A1, A2 = _apply_step(k, b, coeffs.z, coeffs.A1, coeffs.A2, sign=-1.0 if inverse else 1.0)
    return VarCoeffs(new_n, A1[()] if np.ndim(A1) else A1, A2[()] if np.ndim(A2) else A2, coeffs.z, coeffs.level)


def kappa(coeffs: VarCoeffs, x: float) -> complex:
    """``A1^2 + A2^2 - A1 A2 x`` (algebraic squares, not moduli)."""
    A1, A2 = coeffs.A1, coeffs.A2
    return A1 * A1 + A2 * A2 - A1 * A2 * x


def kappa_lower_bound(coeffs: VarCoeffs, x: float) -> float:
    """``(1 - |x|/2)(|A1|^2 + |A2|^2)``, a lower bound for ``|kappa|`` at real x and real A."""
    return (1.0 - abs(x) / 2.0) * coeffs.norm2


def single_bump_update(pvec: PolyPair, v: float, site: int, z, p_site_prev) -> PolyPair:
    """Add one bump ``b_site = v`` to a level-l pair at index ``n >= site``.

    ``p_site_prev`` is the level-l value ``p_{site-1}(z)``; the update is

        p_n     -> p_n     - v p_{site-1} psi1_{n-site}(z)
        p_{n-1} -> p_{n-1} - v p_{site-1} psi1_{n-1-site}(z)

    and is exact until the next site.
    """
    n = pvec.n
    if n < site:
        raise ValueError(f"bump update needs n >= site (n={n}, site={site})")
    if v == 0:
        return pvec
    c = v * p_site_prev
    u = chebyshev_u(np.array([n - site, n - 1 - site]), z)
    p_n = pvec.p_n - c * u[0]
    p_prev = pvec.p_prev - c * u[1]
    return PolyPair(n, p_n[()] if np.ndim(p_n) else p_n, p_prev[()] if np.ndim(p_prev) else p_prev, pvec.z)
