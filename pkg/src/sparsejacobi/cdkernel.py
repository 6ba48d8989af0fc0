"""Christoffel-Darboux kernels and their deviation from the sine kernel.

``K_n(z, w) = sum_{j<n} p_j(z) p_j(w)``.  The closed (CD) form

    K_n(z, w) = (p_n(z) p_{n-1}(w) - p_n(w) p_{n-1}(z)) / (z - w)

needs only the last two polynomials; on the diagonal it becomes
``p_n'(z) p_{n-1}(z) - p_n(z) p_{n-1}'(z)``.  Queries are posed in the
scaled variables ``z = x + a/n``, ``w = x + b/n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ddouble as ddm
from .chebyshev import sine_target, transfer_entries
from .errors import ConfluentNonReal, DegenerateDiagonal, OutsideBulkError
from .jacobi import JacobiParams, iterate_batch, propagate, recurrence_state

NEAR_CONFLUENT = 1e-8
DIAG_FLOOR = 1e-300


@dataclass(frozen=True)
class KernelQuery:
    x: float
    a: complex
    b: complex
    n: int
    level: int | str | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("kernel order n must be >= 1")
        if abs(complex(self.a).imag) > 1 or abs(complex(self.b).imag) > 1:
            raise ValueError("|Im a| and |Im b| must be <= 1")
        reach = max(abs(self.a), abs(self.b)) / self.n
        if not abs(self.x) + reach < 2.0:
            raise OutsideBulkError(f"x={self.x} with offsets {self.a}, {self.b} leaves (-2, 2) at n={self.n}")

    @property
    def z(self) -> complex:
        return self.x + self.a / self.n

    @property
    def w(self) -> complex:
        return self.x + self.b / self.n

    def params_for(self, params: JacobiParams) -> JacobiParams:
        return params if self.level is None else params.at_level(self.level)


@dataclass(frozen=True)
class KernelValue:
    K: complex
    K_diag: complex
    ratio: complex
    n: int


def _states(points, n, params, method="jump", compensated=False):
    """``(p_n, p_{n-1}, p_n', p_{n-1}')`` arrays at ``points``."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    if compensated or method == "recurrence":
        rows = [recurrence_state(n, z, params, compensated=compensated) for z in points]
        return tuple(np.array(col, dtype=complex) for col in zip(*rows))
    if method != "jump":
        raise ValueError(f"unknown method {method!r}")
    return propagate(n, points, params, derivative=True)


def _diag(s, i):
    p, q, dp, dq = s
    return dp[i] * q[i] - p[i] * dq[i]


def _offdiag(z, w, s, i, j):
    p, q = s[0], s[1]
    return (p[i] * q[j] - p[j] * q[i]) / (z - w)


def _is_near_confluent(z, w):
    d = abs(z - w)
    return 0 < d < NEAR_CONFLUENT * (1 + abs(z))


def cd_kernel(q: KernelQuery, params: JacobiParams, method: str = "jump",
              compensated: bool = False, derivative: bool = True) -> complex:
    """K_n(x + a/n, x + b/n) from the CD formula.

    ``method="jump"`` evaluates the polynomials gap by gap (cost independent
    of n), ``"recurrence"`` steps the three-term recurrence.  At ``a == b``
    the confluent form with ``p_n'`` is used; if ``derivative`` is False that
    path is refused for non-real points.  Near-confluent pairs are evaluated
    on the diagonal at their midpoint, which is exact to first order.
    """
    params = q.params_for(params)
    z, w = q.z, q.w
    if z == w or _is_near_confluent(z, w):
        if not derivative and complex(z).imag != 0:
            raise ConfluentNonReal("confluent kernel at non-real point needs the derivative path")
        mid = z if z == w else 0.5 * (z + w)
        s = _states([mid], q.n, params, method, compensated)
        return complex(_diag(s, 0))
    s = _states([z, w], q.n, params, method, compensated)
    return complex(_offdiag(z, w, s, 0, 1))


def cd_kernel_direct(q: KernelQuery, params: JacobiParams, compensated: bool = False) -> complex:
    """The defining sum ``sum_{j<n} p_j(z) p_j(w)``, streamed through the recurrence."""
    params = q.params_for(params)
    if compensated:
        return _direct_dd(q, params)
    total = 0j
    for j, p in iterate_batch(q.n - 1, [q.z, q.w], params):
        total += p[0] * p[1]
    return complex(total)


def _direct_dd(q, params):
    zs, ws = ddm.cdd(q.z), ddm.cdd(q.w)
    sites, values = params.sites, params.values
    state = {}
    for key, c in (("z", zs), ("w", ws)):
        state[key] = [ddm.cdd(0.0), ddm.cdd(1.0), c]
    total = ddm.cdd_mul(state["z"][1], state["w"][1])
    ptr = 0
    for k in range(1, q.n):
        hit = ptr < len(sites) and sites[ptr] == k
        for st in state.values():
            prev, cur, c = st
            coef = ddm.cdd_sub(c, ddm.cdd(values[ptr])) if hit else c
            st[0], st[1] = cur, ddm.cdd_sub(ddm.cdd_mul(coef, cur), prev)
        if hit:
            ptr += 1
        total = ddm.cdd_add(total, ddm.cdd_mul(state["z"][1], state["w"][1]))
    return ddm.cdd_to_complex(total)


@dataclass(frozen=True)
class KernelGrid:
    """Kernel values for many ``(a, b)`` pairs at one ``(x, n)``."""

    x: float
    n: int
    a: np.ndarray
    b: np.ndarray
    K: np.ndarray
    K_diag: complex
    ratio: np.ndarray
    target: np.ndarray

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.ratio - self.target)


def kernel_grid(x: float, n: int, pairs, params: JacobiParams, method: str = "jump",
                compensated: bool = False) -> KernelGrid:
    """Kernel ratios for all ``(a, b)`` in ``pairs`` sharing one evaluation pass.

    Distinct points ``x + a/n`` are deduplicated so each is propagated once.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty (a, b) grid")
    for a, b in pairs:
        KernelQuery(x, a, b, n)
    a = np.array([p[0] for p in pairs], dtype=complex)
    b = np.array([p[1] for p in pairs], dtype=complex)
    offsets = np.unique(np.concatenate([a, b, [0j]]))
    pts = x + offsets / n
    index = {o: i for i, o in enumerate(offsets)}
    s = _states(pts, n, params, method, compensated)
    i0 = index[0j]
    K_diag = complex(_diag(s, i0))
    if abs(K_diag) < DIAG_FLOOR:
        raise DegenerateDiagonal(f"K_n(x, x) = {K_diag} at x={x}, n={n}")
    K = np.empty(len(pairs), dtype=complex)
    near = []
    for k, (ak, bk) in enumerate(zip(a, b)):
        i, j = index[ak], index[bk]
        z, w = pts[i], pts[j]
        if i == j:
            K[k] = K_diag if i == i0 else _diag(s, i)
        elif _is_near_confluent(z, w):
            near.append(k)
        else:
            K[k] = _offdiag(z, w, s, i, j)
    if near:
        mids = np.array([0.5 * (x + a[k] / n + x + b[k] / n) for k in near])
        sm = _states(mids, n, params, method, compensated)
        for t, k in enumerate(near):
            K[k] = _diag(sm, t)
    ratio = K / K_diag
    # the a = b = 0 entries are the diagonal itself
    ratio[(a == 0) & (b == 0)] = 1.0
    target = sine_target(x, a.real, b.real) if np.all(a.imag == 0) and np.all(b.imag == 0) else _complex_sine_target(x, a, b)
    return KernelGrid(float(x), int(n), a, b, K, K_diag, ratio, np.asarray(target))


def _complex_sine_target(x, a, b):
    r = 1.0 / np.sqrt(4.0 - x * x)
    t = r * (b - a)
    out = np.ones_like(t)
    nz = t != 0
    out[nz] = np.sin(t[nz]) / t[nz]
    return out


def kernel_ratio(q: KernelQuery, params: JacobiParams, method: str = "jump",
                 compensated: bool = False) -> KernelValue:
    """``K_n(x + a/n, x + b/n) / K_n(x, x)`` with both kernels from one pass."""
    g = kernel_grid(q.x, q.n, [(q.a, q.b)], q.params_for(params), method, compensated)
    return KernelValue(complex(g.K[0]), g.K_diag, complex(g.ratio[0]), q.n)


def universality_error(x: float, n: int, grid, params: JacobiParams, method: str = "jump",
                       compensated: bool = False) -> float:
    """``max |ratio - sine_target|`` over the ``(a, b)`` grid."""
    return float(kernel_grid(x, n, grid, params, method, compensated).abs_err.max())


def constantA_kernel(A, q: KernelQuery, normalize: bool = False) -> complex:
    """Kernel of ``phi_j = A1 psi1_j + A2 psi2_j`` (a free solution with fixed coefficients).

    The CD form holds because the boundary term ``phi_0 phi_{-1}`` is the
    same at both points.  ``normalize`` divides by ``n (A1^2 + A2^2 - A1 A2 x)``.
    """
    A1, A2 = complex(A[0]), complex(A[1])
    if A1 == 0 and A2 == 0:
        raise ValueError("A must be nonzero")
    n = q.n
    z, w = q.z, q.w
    pts = np.array([z] if z == w else [z, w], dtype=complex)
    (t11, t12, t21, t22), (d11, d12, d21, d22) = transfer_entries(n, pts, derivative=True)
    p, qq = t11 * A1 + t12 * A2, t21 * A1 + t22 * A2
    dp, dq = d11 * A1 + d12 * A2, d21 * A1 + d22 * A2
    if z == w:
        K = dp[0] * qq[0] - p[0] * dq[0]
    else:
        K = (p[0] * qq[1] - p[1] * qq[0]) / (z - w)
    if normalize:
        K = K / (n * (A1 * A1 + A2 * A2 - A1 * A2 * q.x))
    return complex(K)
