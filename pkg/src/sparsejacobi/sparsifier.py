"""Inductive choice of sparse sites so that universality survives each new bump.

Given sites ``N_1..N_l`` the level-l operator (finite rank perturbation of
the free one) has sine-kernel asymptotics.  The next site is placed only
once its normalised kernel

    K^(l)_n(x + a/n, x + b/n) / (n kappa^(l)(x))

is within ``tolerance_slack / l`` of ``2 sinc / (4 - x^2)`` on a grid of
``x`` and ``|a|, |b| <= l``, the coefficient ratios
``|A(x + a/n)|^2 / |A(x)|^2`` are at most 2, and the shifted points stay in
``I_m``.  "For all n beyond the threshold" is checked on a fixed set of
probe multiples of the candidate.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cdkernel import kernel_grid
from .chebyshev import m_bound, scaled_sine_limit
from .errors import CapExceeded, EnvelopeError
from .jacobi import JacobiParams, Rule, SparseSpec
from .varparam import coeffs_chain

SCAN_LIMIT = 10 ** 18
A_RATIO_BOUND = 2.0


def _first_below(env, c, limit=SCAN_LIMIT):
    """Least ``n >= 1`` with ``env(n) < c`` for non-increasing ``env`` (None if beyond ``limit``)."""
    if env(1) < c:
        return 1
    hi = 2
    while env(hi) >= c:
        if hi > limit:
            return None
        hi *= 2
    lo = hi // 2  # env(lo) >= c
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if env(mid) < c:
            hi = mid
        else:
            lo = mid
    return hi


class MSequence:
    """Staircase ``n -> m_n`` tying the envelope decay to the interval bounds.

    ``threshold(r)`` is the first index with ``envelope < 1/(M_r^4 r^4)``;
    ``m_n = r`` for ``threshold(r) < n <= threshold(r + 1)`` and 1 before the
    first threshold.  Thresholds are found on demand and cached; ``r_max``
    caps the staircase (only reached for envelopes that vanish outright).
    """

    def __init__(self, envelope, r_max: int = 64, scan_limit: int = SCAN_LIMIT):
        self.envelope = envelope
        self.r_max = r_max
        self.scan_limit = scan_limit
        self._thresholds = {}
        if self.threshold(1) is None:
            raise EnvelopeError(f"envelope stays above 1/M_1^4 up to index {scan_limit}")

    def threshold(self, r: int):
        if r not in self._thresholds:
            M = m_bound(r).M
            self._thresholds[r] = _first_below(self.envelope, 1.0 / (M ** 4 * r ** 4), self.scan_limit)
        return self._thresholds[r]

    def __call__(self, n: int) -> int:
        m = 1
        for r in range(1, self.r_max + 1):
            t = self.threshold(r)
            if t is None or t >= n:
                break
            m = r
        return m

    def breakpoints(self, r_upto: int) -> dict:
        """``r -> first index with m_n = r`` for the thresholds found up to ``r_upto``."""
        out = {}
        for r in range(1, min(r_upto, self.r_max) + 1):
            t = self.threshold(r)
            if t is None:
                break
            first = t + 1
            if self(first) == r:
                out[r] = first
        return out

    def decay_values(self, r_upto: int) -> dict:
        """``envelope_n m_n^2 M_{m_n}^4`` at each breakpoint (each is below ``1/r^2``)."""
        return {r: self.envelope(n) * r ** 2 * m_bound(r).M ** 4 for r, n in self.breakpoints(r_upto).items()}


def build_m_sequence(spec, r_max: int = 64, scan_limit: int = SCAN_LIMIT) -> MSequence:
    """m-sequence for a :class:`SparseSpec` (its envelope) or any non-increasing callable."""
    env = spec.envelope if isinstance(spec, SparseSpec) else spec
    return MSequence(env, r_max=r_max, scan_limit=scan_limit)


@dataclass(frozen=True)
class SparsifierConfig:
    x_grid_size: int = 9
    ab_grid_size: int = 7
    probe_factors: tuple = (1, 2, 4, 8)
    tolerance_slack: float = 0.5
    n_cap: int = 10 ** 7
    ratio_floor: float = 4.0
    per_level_floor: bool = True
    search_growth: float = 2.0 ** 0.25
    threads: int = 1
    strip_check: bool = True
    r_max: int = 64

    def __post_init__(self):
        if not 0 < self.tolerance_slack < 1:
            raise ValueError("tolerance_slack must lie in (0, 1)")
        if self.ratio_floor < 2:
            raise ValueError("ratio_floor must be >= 2")
        if self.search_growth <= 1:
            raise ValueError("search_growth must exceed 1")
        if min(self.probe_factors) < 1:
            raise ValueError("probe factors must be >= 1")

    def floor_ratio(self, level: int) -> float:
        return self.ratio_floor * (max(level, 1) if self.per_level_floor else 1)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SparsifierConfig":
        d = dict(d)
        if "probe_factors" in d:
            d["probe_factors"] = tuple(d["probe_factors"])
        return cls(**d)


@dataclass(frozen=True)
class ProbeResult:
    n: int
    kernel_error: float
    ratio_error: float
    ratio_A: float
    in_interval: bool

    def passes(self, tol: float) -> bool:
        return (self.kernel_error <= tol and self.ratio_error <= tol
                and self.ratio_A <= A_RATIO_BOUND and self.in_interval)


@dataclass(frozen=True)
class GapCertificate:
    """Evidence that the level-l kernel has settled before site ``l + 1`` is placed.

    ``max_kernel_error`` is the normalised-kernel deviation and
    ``max_ratio_error`` the ``K/K(x, x)`` deviation, both at ``n = N_hat``;
    ``probes`` holds every probed order with its errors.
    """

    level: int
    N_hat: int
    max_kernel_error: float
    max_ratio_error: float
    ratio_A_max: float
    tolerance: float
    m: int
    interval: tuple
    x_grid: tuple
    ab_grid: tuple
    probes: tuple = ()
    strip_error: float | None = None
    prev_site: int = 1

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "N_hat": self.N_hat,
            "max_kernel_error": self.max_kernel_error,
            "max_ratio_error": self.max_ratio_error,
            "ratio_A_max": self.ratio_A_max,
            "tolerance": self.tolerance,
            "m": self.m,
            "interval": list(self.interval),
            "x_grid": list(self.x_grid),
            "ab_grid": [list(p) for p in self.ab_grid],
            "probes": [[p.n, p.kernel_error, p.ratio_error, p.ratio_A, p.in_interval] for p in self.probes],
            "strip_error": self.strip_error,
            "prev_site": self.prev_site,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GapCertificate":
        return cls(
            level=d["level"], N_hat=d["N_hat"], max_kernel_error=d["max_kernel_error"],
            max_ratio_error=d["max_ratio_error"], ratio_A_max=d["ratio_A_max"],
            tolerance=d["tolerance"], m=d["m"], interval=tuple(d["interval"]),
            x_grid=tuple(d["x_grid"]), ab_grid=tuple(tuple(p) for p in d["ab_grid"]),
            probes=tuple(ProbeResult(*p) for p in d["probes"]),
            strip_error=d.get("strip_error"), prev_site=d.get("prev_site", 1),
        )


def certification_interval(level: int, m: int) -> tuple:
    """``I_m`` shrunk by ``1/max(level, 1)`` on each side (a single point when that closes it)."""
    lp = max(level, 1)
    lo, hi = -2.0 + 1.0 / m + 1.0 / lp, 2.0 - 1.0 / m - 1.0 / lp
    if lo > hi:
        lo = hi = 0.0
    return lo, hi


def chebyshev_grid(lo: float, hi: float, size: int) -> tuple:
    k = np.arange(size)
    pts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * size))
    pts = np.where(np.abs(pts) < 1e-15, 0.0, pts)
    return tuple(float(v) for v in np.unique(np.round(pts, 15)))


def lattice(half_width: float, size: int) -> tuple:
    side = np.linspace(-half_width, half_width, size)
    return tuple((float(a), float(b)) for a in side for b in side)


def _evaluate_x(x, n, pairs, params, m_interval):
    g = kernel_grid(x, n, pairs, params)
    A1, A2 = coeffs_chain(n, [x], params)
    kap = A1[0] ** 2 + A2[0] ** 2 - A1[0] * A2[0] * x
    dev = np.abs(g.K / (n * kap) - scaled_sine_limit(x, g.a.real, g.b.real))
    offsets = np.unique(np.concatenate([g.a, g.b]))
    pts = x + offsets / n
    S1, S2 = coeffs_chain(n, pts, params)
    base = abs(A1[0]) ** 2 + abs(A2[0]) ** 2
    ratio_A = float(np.max((np.abs(S1) ** 2 + np.abs(S2) ** 2) / base))
    lo, hi = m_interval
    inside = bool(np.all((pts.real >= lo) & (pts.real <= hi)))
    return float(dev.max()), float(g.abs_err.max()), ratio_A, inside


def _pool_map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def probe(n: int, params: JacobiParams, x_grid, pairs, m_interval, threads: int = 1) -> ProbeResult:
    """Evaluate all certification conditions at one order ``n``."""
    res = _pool_map(lambda x: _evaluate_x(x, n, pairs, params, m_interval), x_grid, threads)
    return ProbeResult(
        int(n),
        max(r[0] for r in res),
        max(r[1] for r in res),
        max(r[2] for r in res),
        all(r[3] for r in res),
    )


def strip_error(n: int, params: JacobiParams, x_grid, half_width: float) -> float:
    """Ratio deviation at a few strip points ``a + i t``, ``|t| = 1`` (informational)."""
    side = (-half_width, 0.0, half_width)
    pairs = [(a + 1j * t, b) for a in side for b in side for t in (-1.0, 1.0)]
    return max(float(kernel_grid(x, n, pairs, params).abs_err.max()) for x in x_grid)


def find_gap(level: int, placed: SparseSpec, mseq: MSequence, cfg: SparsifierConfig | None = None) -> GapCertificate:
    """Smallest probed threshold ``N_hat`` at which the level-l operator certifies.

    Candidates start at ``floor_ratio(l) * N_l`` (``N_0 = 1``) and grow
    geometrically; a candidate passes when every probe ``N_hat * f`` for ``f``
    in ``cfg.probe_factors`` passes.  Raises :class:`CapExceeded` (carrying
    the best certificate seen) past ``cfg.n_cap``.
    """
    cfg = cfg or SparsifierConfig()
    if len(placed.sites) != level:
        raise ValueError(f"level {level} needs exactly {level} placed sites, got {len(placed.sites)}")
    params = JacobiParams(placed, level)
    prev = placed.sites[-1] if placed.sites else 1
    floor = math.ceil(cfg.floor_ratio(level) * prev)
    if cfg.n_cap < 10 * cfg.ratio_floor * prev:
        raise CapExceeded(f"n_cap={cfg.n_cap} is below 10 * ratio_floor * {prev}")
    lp = max(level, 1)
    tol = cfg.tolerance_slack / lp
    m = mseq(level + 1)
    bound = m_bound(m)
    interval = certification_interval(level, m)
    x_grid = chebyshev_grid(*interval, cfg.x_grid_size)
    pairs = lattice(float(lp), cfg.ab_grid_size)
    cache = {}

    def run(n):
        if n not in cache:
            cache[n] = probe(n, params, x_grid, pairs, (bound.lo, bound.hi), cfg.threads)
        return cache[n]

    def certificate(c, probes):
        first = probes[0]
        strip = strip_error(c, params, x_grid, float(lp)) if cfg.strip_check else None
        return GapCertificate(
            level=level, N_hat=int(c), max_kernel_error=first.kernel_error,
            max_ratio_error=first.ratio_error,
            ratio_A_max=max(p.ratio_A for p in probes), tolerance=tol, m=m,
            interval=interval, x_grid=x_grid, ab_grid=pairs, probes=tuple(probes),
            strip_error=strip, prev_site=prev,
        )

    best, best_score = None, math.inf
    c = floor
    while c <= cfg.n_cap:
        probes = [run(int(c * f)) for f in cfg.probe_factors]
        if all(p.passes(tol) for p in probes):
            return certificate(c, probes)
        score = max(max(p.kernel_error, p.ratio_error) for p in probes)
        if score < best_score:
            best, best_score = (c, probes), score
        c = max(c + 1, math.ceil(c * cfg.search_growth))
    raise CapExceeded(
        f"level {level}: no threshold up to n_cap={cfg.n_cap} met tolerance {tol:.3g}",
        best=certificate(*best) if best else None,
    )


def generate_spec(v_rule: Rule, levels: int, cfg: SparsifierConfig | None = None):
    """Place ``levels`` sites one at a time, each at the certified threshold.

    Returns ``(spec, certificates)``.  On :class:`CapExceeded` the exception's
    ``partial`` attribute holds what was placed before the failure.
    """
    cfg = cfg or SparsifierConfig()
    if levels < 0:
        raise ValueError("levels must be >= 0")
    spec = SparseSpec(v_rule)
    if levels == 0:
        return spec, []
    mseq = build_m_sequence(spec, r_max=cfg.r_max)
    certs = []
    for level in range(levels):
        try:
            cert = find_gap(level, spec, mseq, cfg)
        except CapExceeded as exc:
            exc.partial = (spec, certs)
            raise
        certs.append(cert)
        spec = spec.with_sites(spec.sites + (cert.N_hat,))
    return spec, certs


def replay_certificate(cert: GapCertificate, spec: SparseSpec, n: int | None = None,
                       level: int | str | None = None, threads: int = 1) -> ProbeResult:
    """Re-evaluate a certificate's grid, by default at its own ``N_hat`` and level."""
    params = JacobiParams(spec, cert.level if level is None else level)
    bound = m_bound(cert.m)
    return probe(cert.N_hat if n is None else n, params, cert.x_grid, cert.ab_grid,
                 (bound.lo, bound.hi), threads)


def classify_measure(spec) -> str:
    """Sum-of-squares dichotomy for the spectral measure on (-2, 2).

    With sparse sites and ``v_j -> 0``: ``sum v_j^2 = inf`` gives a purely
    singular continuous measure, a finite sum an absolutely continuous one.
    Returns ``"singular"``, ``"absolutely_continuous"`` or ``"inconclusive"``.
    """
    rule = spec.v_rule if isinstance(spec, SparseSpec) else spec
    env = spec.envelope_rule if isinstance(spec, SparseSpec) else None
    verdict = _classify_rule(rule)
    if verdict != "inconclusive" or env is None:
        return verdict
    # couplings are dominated by the envelope: a square-summable envelope settles it
    return "absolutely_continuous" if _square_summable(env) else "inconclusive"


def _classify_rule(rule) -> str:
    if not isinstance(rule, Rule):
        return "inconclusive"
    if rule.kind == "zero" or rule.scale == 0 and rule.kind in ("power", "geometric"):
        return "absolutely_continuous"
    if rule.kind == "explicit":
        # finitely many nonzero couplings
        return "absolutely_continuous"
    if not rule.decays():
        return "inconclusive"
    if rule.kind == "power":
        return "singular" if 2 * rule.exponent <= 1 else "absolutely_continuous"
    return "absolutely_continuous"


def _square_summable(env) -> bool:
    return _classify_rule(env) == "absolutely_continuous"
