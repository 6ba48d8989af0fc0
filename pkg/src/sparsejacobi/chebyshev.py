"""Free (unperturbed) objects: Chebyshev solutions, transfer matrices and bounds.

The free difference equation ``z psi_n = psi_{n+1} + psi_{n-1}`` has the two
solutions ``psi1`` (``psi1_0 = 1, psi1_{-1} = 0``) and ``psi2``
(``psi2_0 = 0, psi2_{-1} = 1``).  With ``z = 2 cos(theta)``::

    psi1_n = sin((n + 1) theta) / sin(theta)      (= U_n(z))
    psi2_n = -sin(n theta) / sin(theta)           (= -psi1_{n-1})

Everything here is vectorised over ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OutsideBulkError, ValidationFailure

STRIP_SAFETY = 4.0


@dataclass(frozen=True)
class SpectralPoint:
    """Energy ``x`` in (-2, 2) together with its angle ``theta`` in (0, pi)."""

    x: float
    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi:
            raise OutsideBulkError(f"theta={self.theta} not in (0, pi)")
        if abs(self.x - 2.0 * np.cos(self.theta)) > 1e-14:
            raise ValueError("x and theta are inconsistent")

    @classmethod
    def from_x(cls, x: float) -> "SpectralPoint":
        if not -2.0 < x < 2.0:
            raise OutsideBulkError(f"x={x} is outside the bulk (-2, 2)")
        return cls(float(x), float(np.arccos(x / 2.0)))

    @classmethod
    def from_theta(cls, theta: float) -> "SpectralPoint":
        return cls(float(2.0 * np.cos(theta)), float(theta))


def _theta(z, check_bulk=True):
    z = np.asarray(z)
    if check_bulk and not np.iscomplexobj(z) and np.any(np.abs(z) >= 2.0):
        raise OutsideBulkError("real argument with |z| >= 2 in trigonometric mode")
    if np.iscomplexobj(z):
        return np.arccos(z / 2.0)
    return np.arccos(z.astype(float) / 2.0)


def chebyshev_u(k, z, check_bulk=True):
    """``U_k(z) = sin((k + 1) theta) / sin(theta)``; valid for any integer k >= -2."""
    th = _theta(z, check_bulk)
    return np.sin((np.asarray(k) + 1) * th) / np.sin(th)


def chebyshev_u_prime(k, z, check_bulk=True):
    """Derivative of :func:`chebyshev_u` with respect to ``z``."""
    th = _theta(z, check_bulk)
    s, c = np.sin(th), np.cos(th)
    k1 = np.asarray(k) + 1
    dtheta = (k1 * np.cos(k1 * th) * s - np.sin(k1 * th) * c) / (s * s)
    return dtheta * (-0.5 / s)


def _recurrence_values(n, z, init):
    z = complex(z) if np.iscomplexobj(np.asarray(z)) else float(z)
    prev, cur = init
    if n == -1:
        return prev
    for _ in range(n):
        prev, cur = cur, z * cur - prev
    return cur


def psi1(n: int, z, mode: str = "trig"):
    """First free solution at index ``n >= -1``.

    ``mode="trig"`` uses the closed form (vectorised over ``n`` and ``z``; real ``z``
    must lie strictly inside (-2, 2)), ``mode="recurrence"`` iterates the
    difference equation and works for any scalar ``z``.
    """
    if np.any(np.asarray(n) < -1):
        raise ValueError("n must be >= -1")
    if mode == "trig":
        return chebyshev_u(n, z)
    if mode == "recurrence":
        return _recurrence_values(n, z, (0.0, 1.0))
    raise ValueError(f"unknown mode {mode!r}")


def psi2(n: int, z, mode: str = "trig"):
    """Second free solution; identically ``-psi1(n - 1, z)``."""
    if np.any(np.asarray(n) < -1):
        raise ValueError("n must be >= -1")
    if mode == "trig":
        return -chebyshev_u(n - 1, z)
    if mode == "recurrence":
        return _recurrence_values(n, z, (1.0, 0.0))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """``T_n(z) = [[psi1_n, psi2_n], [psi1_{n-1}, psi2_{n-1}]]``, the n-th power of ``[[z, -1], [1, 0]]``."""

    entries: np.ndarray

    @property
    def det(self) -> complex:
        e = self.entries
        return e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def inverse(self) -> "TransferMatrix":
        # det = 1, so the inverse is the adjugate
        e = self.entries
        return TransferMatrix(np.array([[e[1, 1], -e[0, 1]], [-e[1, 0], e[0, 0]]]))

    def __matmul__(self, other):
        if isinstance(other, TransferMatrix):
            return TransferMatrix(self.entries @ other.entries)
        return self.entries @ np.asarray(other)


def transfer_matrix(n: int, z, method: str = "power") -> TransferMatrix:
    """T_n(z) for a scalar ``z``.

    ``method="power"`` uses binary exponentiation of the one-step matrix,
    ``method="trig"`` fills the entries from the closed forms.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    dtype = complex if np.iscomplexobj(np.asarray(z)) else float
    if method == "power":
        step = np.array([[z, -1.0], [1.0, 0.0]], dtype=dtype)
        return TransferMatrix(np.linalg.matrix_power(step, n))
    if method == "trig":
        u = chebyshev_u(np.array([n, n - 1, n - 2]), z)
        return TransferMatrix(np.array([[u[0], -u[1]], [u[1], -u[2]]], dtype=dtype))
    raise ValueError(f"unknown method {method!r}")


def transfer_entries(g, z, derivative=False):
    """Vectorised T_g(z) entries for gap lengths ``g >= 0``.

    Returns ``(t11, t12, t21, t22)`` (and their z-derivatives when
    ``derivative`` is set), each broadcast over ``g`` and ``z``.
    """
    g = np.asarray(g)
    u0, u1, u2 = (chebyshev_u(g - k, z) for k in range(3))
    out = (u0, -u1, u1, -u2)
    if not derivative:
        return out
    d0, d1, d2 = (chebyshev_u_prime(g - k, z) for k in range(3))
    return out, (d0, -d1, d1, -d2)


@dataclass(frozen=True)
class IntervalBound:
    m: int
    lo: float
    hi: float
    M: float
    M_strip: float

    def contains(self, x) -> bool:
        return bool(np.all((np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)))


def _sin_theta_min(m):
    return np.sqrt(1.0 / m - 1.0 / (4.0 * m * m))


def _validation_norms(m, n_values, x_values, t_values):
    worst_real, worst_strip = 0.0, 0.0
    for n in n_values:
        if n == 0:
            continue
        z = x_values[:, None] + 1j * t_values[None, :] / n
        ents = transfer_entries(n, z)
        fro = np.sqrt(sum(np.abs(e) ** 2 for e in ents))
        real_col = np.argmin(np.abs(t_values))
        worst_real = max(worst_real, float(fro[:, real_col].max()))
        worst_strip = max(worst_strip, float(fro.max()))
    return worst_real, worst_strip


@lru_cache(maxsize=None)
def m_bound(m: int, validate: bool = True) -> IntervalBound:
    """Transfer-matrix bound on ``I_m = [-2 + 1/m, 2 - 1/m]``.

    ``M = 2 / sin(theta_min)`` (entrywise ``|psi| <= 1/sin(theta)``,
    Frobenius aggregation).  The strip bound for ``x + it/n, |t| <= 1`` is
    ``STRIP_SAFETY * M * cosh(1 / (2 sin(theta_min)))``: the cosh factor is
    the growth of ``sin(n theta)`` when ``Im theta ~ t / (2 n sin theta)``.
    Both are checked on a sample grid; a violation raises ValidationFailure.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s = _sin_theta_min(m)
    M = 2.0 / s
    M_strip = STRIP_SAFETY * M * np.cosh(0.5 / s)
    bound = IntervalBound(m, -2.0 + 1.0 / m, 2.0 - 1.0 / m, float(M), float(M_strip))
    if validate:
        n_values = np.unique(np.concatenate([np.arange(1, 65), np.geomspace(64, 1e4, 40).astype(int)]))
        x_values = np.linspace(bound.lo, bound.hi, 101)
        t_values = np.linspace(-1.0, 1.0, 9)
        real, strip = _validation_norms(m, n_values, x_values, t_values)
        if real > bound.M * (1 + 1e-12):
            raise ValidationFailure(f"m={m}: observed real-axis norm {real} exceeds M={bound.M}")
        if strip > bound.M_strip:
            raise ValidationFailure(f"m={m}: observed strip norm {strip} exceeds M_strip={bound.M_strip}")
    return bound


def sine_target(x, a, b):
    """Bulk sine-kernel limit ``sin(r (b - a)) / (r (b - a))`` with ``r = 1/sqrt(4 - x^2)``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 2.0):
        raise OutsideBulkError("sine_target needs |x| < 2")
    r = 1.0 / np.sqrt(4.0 - x * x)
    # np.sinc(t) = sin(pi t)/(pi t), with sinc(0) = 1
    out = np.sinc(r * (np.asarray(b) - np.asarray(a)) / np.pi)
    return out if out.ndim else out[()]


def scaled_sine_limit(x, a, b):
    """Limit of ``K_n(x + a/n, x + b/n) / (n kappa)``: ``2/(4 - x^2)`` times :func:`sine_target`."""
    x = np.asarray(x, dtype=float)
    return 2.0 / (4.0 - x * x) * sine_target(x, a, b)


def rho0(x):
    """Free zero density ``1 / (pi sqrt(4 - x^2))`` on (-2, 2), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 2.0
    out = np.zeros_like(x)
    out[inside] = 1.0 / (np.pi * np.sqrt(4.0 - x[inside] ** 2))
    return out if out.ndim else out[()]
