"""Sparse Jacobi parameters and evaluation of their orthonormal polynomials.

The operator has ``a_n = 1`` and ``b_n = v_j`` at the sparse sites ``n = N_j``
(zero elsewhere).  Polynomials follow ``z p_n = p_{n+1} + b_{n+1} p_n + p_{n-1}``
from ``p_0 = 1, p_{-1} = 0``.

Two evaluation routes are provided:

* :func:`eval_poly` / :func:`eval_poly_stream` run the three-term recurrence
  index by index (O(n) per point, optionally in double-double arithmetic);
* :func:`propagate` jumps over each free gap with the closed-form transfer
  matrix, so its cost is O(number of sites) per point regardless of ``n``.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import ddouble as ddm
from .chebyshev import transfer_entries
from .errors import EscapedBulkError

OVERFLOW_GUARD = 1e200


@dataclass(frozen=True)
class Rule:
    """Closed-form or explicit sequence ``j -> value`` for ``j >= 1``.

    kinds: ``power`` (``scale * j**-exponent``), ``geometric``
    (``scale * ratio**j``), ``zero``, ``explicit`` (``values[j-1]``, zero past
    the end).
    """

    kind: str
    scale: float = 1.0
    exponent: float = 0.0
    ratio: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("power", "geometric", "zero", "explicit"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def power(cls, exponent: float, scale: float = 1.0) -> "Rule":
        return cls("power", scale=float(scale), exponent=float(exponent))

    @classmethod
    def geometric(cls, ratio: float, scale: float = 1.0) -> "Rule":
        return cls("geometric", scale=float(scale), ratio=float(ratio))

    @classmethod
    def zero(cls) -> "Rule":
        return cls("zero")

    @classmethod
    def explicit(cls, values) -> "Rule":
        return cls("explicit", values=tuple(values))

    def __call__(self, j: int) -> float:
        if j < 1:
            raise ValueError("rules are indexed from j = 1")
        if self.kind == "power":
            return self.scale * float(j) ** (-self.exponent)
        if self.kind == "geometric":
            return self.scale * self.ratio ** j
        if self.kind == "explicit":
            return self.values[j - 1] if j <= len(self.values) else 0.0
        return 0.0

    def envelope(self) -> "Rule":
        """Non-increasing majorant of ``|rule|`` (exact for the closed forms)."""
        if self.kind == "power":
            return Rule.power(self.exponent, abs(self.scale))
        if self.kind == "geometric":
            return Rule.geometric(abs(self.ratio), abs(self.scale))
        if self.kind == "explicit":
            env, run = [], 0.0
            for v in reversed(self.values):
                run = max(run, abs(v))
                env.append(run)
            return Rule.explicit(reversed(env))
        return Rule.zero()

    def decays(self) -> bool:
        """True when the sequence tends to zero."""
        if self.kind == "power":
            return self.exponent > 0 or self.scale == 0
        if self.kind == "geometric":
            return abs(self.ratio) < 1 or self.scale == 0
        return True

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power":
            d.update(scale=self.scale, exponent=self.exponent)
        elif self.kind == "geometric":
            d.update(scale=self.scale, ratio=self.ratio)
        elif self.kind == "explicit":
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Rule":
        d = dict(d)
        kind = d.pop("kind")
        if "values" in d:
            d["values"] = tuple(d["values"])
        return cls(kind, **d)


@dataclass(frozen=True)
class SparseSpec:
    """Couplings ``v_j`` (from ``v_rule``) placed at sites ``N_1 < N_2 < ...``.

    Only the listed ``sites`` are materialised.  ``adaptive`` marks a spec
    whose sites are still to be chosen by the sparsifier.
    """

    v_rule: Rule
    sites: tuple = ()
    envelope_rule: Rule | None = None
    ratio_sparse: bool = False
    adaptive: bool = False
    couplings: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sites = tuple(int(n) for n in self.sites)
        object.__setattr__(self, "sites", sites)
        if self.envelope_rule is None:
            object.__setattr__(self, "envelope_rule", self.v_rule.envelope())
        if sites and sites[0] < 2:
            raise ValueError("N_1 must be >= 2")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise ValueError("sites must be strictly increasing")
        v = tuple(self.v_rule(j) for j in range(1, len(sites) + 1))
        object.__setattr__(self, "couplings", v)
        env = [self.envelope(j) for j in range(1, len(sites) + 2)]
        if any(e2 > e1 for e1, e2 in zip(env, env[1:])):
            raise ValueError("envelope must be non-increasing")
        for j, vj in enumerate(v, start=1):
            if abs(vj) > env[j - 1] * (1 + 1e-15):
                raise ValueError(f"envelope below |v_{j}|")
        if self.ratio_sparse:
            ratios = [b / a for a, b in zip(sites, sites[1:])]
            if any(r2 < r1 for r1, r2 in zip(ratios, ratios[1:])):
                raise ValueError("ratio-sparse spec needs non-decreasing N_{j+1}/N_j")

    @classmethod
    def free(cls) -> "SparseSpec":
        return cls(Rule.zero())

    def envelope(self, j: int) -> float:
        return self.envelope_rule(j)

    def with_sites(self, sites) -> "SparseSpec":
        return SparseSpec(self.v_rule, tuple(sites), self.envelope_rule, self.ratio_sparse)

    def to_dict(self) -> dict:
        return {
            "v_rule": self.v_rule.to_dict(),
            "N": "adaptive" if self.adaptive else list(self.sites),
            "envelope_rule": self.envelope_rule.to_dict(),
            "ratio_sparse": self.ratio_sparse,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SparseSpec":
        adaptive = d["N"] == "adaptive"
        env = d.get("envelope_rule")
        return cls(
            Rule.from_dict(d["v_rule"]),
            () if adaptive else tuple(d["N"]),
            Rule.from_dict(env) if env is not None else None,
            bool(d.get("ratio_sparse", False)),
            adaptive,
        )


def dump_spec(spec: SparseSpec, path, extra: dict | None = None) -> None:
    """Write ``spec`` (plus optional extra sections, e.g. certificates) as JSON."""
    doc = {"spec": spec.to_dict()}
    if extra:
        doc.update(extra)
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write spec document {path}: {exc}") from exc


def load_spec(path) -> tuple[SparseSpec, dict]:
    """Read a spec document; returns the spec and the full document."""
    path = Path(path)
    doc = json.loads(path.read_text())
    return SparseSpec.from_dict(doc["spec"]), doc


@dataclass(frozen=True)
class JacobiParams:
    """A spec truncated to its first ``level`` sites (``"full"`` keeps all)."""

    spec: SparseSpec
    level: Union[int, str] = "full"

    def __post_init__(self):
        if self.level != "full" and (not isinstance(self.level, (int, np.integer)) or self.level < 0):
            raise ValueError("level must be 'full' or an integer >= 0")
        k = len(self.spec.sites) if self.level == "full" else min(int(self.level), len(self.spec.sites))
        object.__setattr__(self, "_sites", self.spec.sites[:k])
        object.__setattr__(self, "_values", self.spec.couplings[:k])

    @property
    def sites(self) -> tuple:
        return self._sites

    @property
    def values(self) -> tuple:
        return self._values

    def at_level(self, level: int) -> "JacobiParams":
        return JacobiParams(self.spec, level)

    def active_level(self, n: int) -> int:
        """Number of sites ``N_j < n``, i.e. the sites that shape ``K_n``."""
        return bisect.bisect_left(self._sites, n)


def free_params() -> JacobiParams:
    return JacobiParams(SparseSpec.free())


def b_at(n: int, params: JacobiParams) -> float:
    """Diagonal coefficient ``b_n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i = bisect.bisect_left(params.sites, n)
    if i < len(params.sites) and params.sites[i] == n:
        return params.values[i]
    return 0.0


@dataclass(frozen=True)
class PolyPair:
    n: int
    p_n: complex
    p_prev: complex
    z: complex


def _scalar(z):
    return complex(z) if np.iscomplexobj(np.asarray(z)) else float(z)


def eval_poly_stream(n_max: int, z, params: JacobiParams, sink: Callable[[PolyPair], object]) -> None:
    """Call ``sink`` with ``(p_n, p_{n-1})`` for every ``n = 0..n_max`` in order."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    z = _scalar(z)
    sites, values = params.sites, params.values
    prev, cur = 0.0 * z, 1.0 + 0.0 * z
    sink(PolyPair(0, cur, prev, z))
    ptr = 0
    for n in range(1, n_max + 1):
        if ptr < len(sites) and sites[ptr] == n:
            prev, cur = cur, (z - values[ptr]) * cur - prev
            ptr += 1
        else:
            prev, cur = cur, z * cur - prev
        if abs(cur) > OVERFLOW_GUARD:
            raise EscapedBulkError(f"|p_{n}({z})| exceeded {OVERFLOW_GUARD:g}")
        sink(PolyPair(n, cur, prev, z))


def eval_poly(n: int, z, params: JacobiParams, compensated: bool = False) -> PolyPair:
    """``(p_n(z), p_{n-1}(z))`` by forward recurrence.

    ``compensated`` carries the recurrence in double-double arithmetic and
    rounds once at the end.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if compensated:
        p, q = _recurrence_dd(n, z, params)
        z = _scalar(z)
        if isinstance(z, float):
            p, q = p.real, q.real
        return PolyPair(n, p, q, z)
    z = _scalar(z)
    sites, values = params.sites, params.values
    prev, cur = 0.0 * z, 1.0 + 0.0 * z
    ptr = 0
    # same arithmetic, in the same order, as eval_poly_stream
    for k in range(1, n + 1):
        if ptr < len(sites) and sites[ptr] == k:
            prev, cur = cur, (z - values[ptr]) * cur - prev
            ptr += 1
        else:
            prev, cur = cur, z * cur - prev
        if abs(cur) > OVERFLOW_GUARD:
            raise EscapedBulkError(f"|p_{k}({z})| exceeded {OVERFLOW_GUARD:g}")
    return PolyPair(n, cur, prev, z)


def _recurrence_dd(n, z, params, derivative=False):
    z = complex(z)
    sites, values = params.sites, params.values
    zc = ddm.cdd(z)
    prev, cur = ddm.cdd(0.0), ddm.cdd(1.0)
    dprev, dcur = ddm.cdd(0.0), ddm.cdd(0.0)
    ptr = 0
    for k in range(1, n + 1):
        if ptr < len(sites) and sites[ptr] == k:
            coef = ddm.cdd_sub(zc, ddm.cdd(values[ptr]))
            ptr += 1
        else:
            coef = zc
        nxt = ddm.cdd_sub(ddm.cdd_mul(coef, cur), prev)
        if derivative:
            dnxt = ddm.cdd_sub(ddm.cdd_add(ddm.cdd_mul(coef, dcur), cur), dprev)
            dprev, dcur = dcur, dnxt
        prev, cur = cur, nxt
        if abs(cur[0][0]) + abs(cur[1][0]) > OVERFLOW_GUARD:
            raise EscapedBulkError(f"|p_{k}({z})| exceeded {OVERFLOW_GUARD:g}")
    out = (ddm.cdd_to_complex(cur), ddm.cdd_to_complex(prev))
    if derivative:
        out += (ddm.cdd_to_complex(dcur), ddm.cdd_to_complex(dprev))
    return out


def recurrence_state(n: int, z, params: JacobiParams, compensated: bool = False):
    """``(p_n, p_{n-1}, p_n', p_{n-1}')`` at a scalar ``z`` by recurrence.

    The derivative runs ``z p'_n + p_n = p'_{n+1} + b_{n+1} p'_n + p'_{n-1}``
    alongside the values.
    """
    if compensated:
        return _recurrence_dd(n, z, params, derivative=True)
    z = complex(z)
    sites, values = params.sites, params.values
    prev, cur, dprev, dcur = 0j, 1 + 0j, 0j, 0j
    ptr = 0
    for k in range(1, n + 1):
        if ptr < len(sites) and sites[ptr] == k:
            c = z - values[ptr]
            ptr += 1
        else:
            c = z
        dprev, dcur = dcur, c * dcur + cur - dprev
        prev, cur = cur, c * cur - prev
        if abs(cur) > OVERFLOW_GUARD:
            raise EscapedBulkError(f"|p_{k}({z})| exceeded {OVERFLOW_GUARD:g}")
    return cur, prev, dcur, dprev


def iterate_batch(n_max: int, zs, params: JacobiParams):
    """Yield ``(j, p_j)`` arrays over points ``zs`` for ``j = 0..n_max``."""
    zs = np.asarray(zs, dtype=complex)
    sites, values = params.sites, params.values
    prev, cur = np.zeros_like(zs), np.ones_like(zs)
    yield 0, cur
    ptr = 0
    for k in range(1, n_max + 1):
        if ptr < len(sites) and sites[ptr] == k:
            prev, cur = cur, (zs - values[ptr]) * cur - prev
            ptr += 1
        else:
            prev, cur = cur, zs * cur - prev
        yield k, cur


def propagate(n: int, z, params: JacobiParams, derivative: bool = False):
    """``(p_n, p_{n-1})`` (and z-derivatives) by jumping over free gaps.

    Between sites the recurrence is free, so ``(p_k, p_{k-1})`` advances by
    the closed-form transfer matrix ``T_g(z)``; at a site a single perturbed
    step is taken.  Vectorised over ``z``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    z = np.asarray(z, dtype=complex)
    p, q = np.ones_like(z), np.zeros_like(z)
    dp, dq = np.zeros_like(z), np.zeros_like(z)
    k = 0
    for site, v in zip(params.sites, params.values):
        if site > n:
            break
        p, q, dp, dq = _jump(site - 1 - k, z, p, q, dp, dq, derivative)
        c = z - v
        if derivative:
            dp, dq = c * dp + p - dq, dp
        p, q = c * p - q, p
        k = site
    p, q, dp, dq = _jump(n - k, z, p, q, dp, dq, derivative)
    if derivative:
        return p, q, dp, dq
    return p, q


def _jump(g, z, p, q, dp, dq, derivative):
    if g == 0:
        return p, q, dp, dq
    if derivative:
        (t11, t12, t21, t22), (d11, d12, d21, d22) = transfer_entries(g, z, derivative=True)
        dp, dq = (t11 * dp + t12 * dq + d11 * p + d12 * q,
                  t21 * dp + t22 * dq + d21 * p + d22 * q)
    else:
        t11, t12, t21, t22 = transfer_entries(g, z)
    return t11 * p + t12 * q, t21 * p + t22 * q, dp, dq


def check_nonvanishing(n_max: int, x, params: JacobiParams) -> bool:
    """True when ``(p_n, p_{n-1}) != (0, 0)`` for all ``n <= n_max`` at real ``x``."""
    ok = True

    def sink(pp):
        nonlocal ok
        if pp.p_n == 0 and pp.p_prev == 0:
            ok = False

    eval_poly_stream(n_max, float(x), params, sink)
    return ok

