"""Experiment orchestration: sweeps, convergence tables, quadrature and file output."""
from __future__ import annotations

import contextlib
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cdkernel import KernelQuery, kernel_grid
from .jacobi import JacobiParams, SparseSpec, b_at, dump_spec
from .sparsifier import GapCertificate, SparsifierConfig, generate_spec

log = logging.getLogger(__name__)

ROW_HEADER = ("n", "x", "a", "b", "ratio_re", "ratio_im", "target", "abs_err", "level")
TABLE_HEADER = ("n", "max_abs_err")
QUAD_HEADER = ("node", "weight")


@dataclass
class ExperimentConfig:
    spec: SparseSpec
    x_list: tuple
    ab_grid: tuple
    n_list: tuple
    outputs: dict = field(default_factory=dict)
    compensated: bool = False
    strip_checks: bool = False
    threads: int = 1
    levels: int | None = None
    sparsifier: SparsifierConfig | None = None
    eps_list: tuple = ()

    def __post_init__(self):
        self.x_list = tuple(float(x) for x in self.x_list)
        self.n_list = tuple(int(n) for n in self.n_list)
        self.ab_grid = tuple((a, b) for a, b in self.ab_grid)
        if any(not -2 < x < 2 for x in self.x_list):
            raise ValueError("all x must lie in (-2, 2)")
        if any(n < 2 for n in self.n_list):
            raise ValueError("all n must be >= 2")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if self.spec.adaptive and not self.levels:
            raise ValueError("an adaptive spec needs 'levels'")

    @classmethod
    def from_document(cls, doc: dict, base: Path | None = None) -> "ExperimentConfig":
        """Build from a config document with ``spec``, ``grids`` and ``outputs`` sections."""
        base = base or Path(".")
        spec_doc = doc["spec"]
        if isinstance(spec_doc, str):
            from .jacobi import load_spec
            spec, _ = load_spec(base / spec_doc)
        else:
            spec = SparseSpec.from_dict(spec_doc)
        grids = doc.get("grids", {})
        outputs = {k: str(base / v) for k, v in doc.get("outputs", {}).items()}
        sp = doc.get("sparsifier")
        return cls(
            spec=spec,
            x_list=grids.get("x", (0.0,)),
            ab_grid=[tuple(p) for p in grids.get("ab", [(0.0, 0.0)])],
            n_list=grids.get("n", (1000,)),
            outputs=outputs,
            compensated=bool(doc.get("compensated", False)),
            strip_checks=bool(doc.get("strip_checks", False)),
            threads=int(doc.get("threads", 1)),
            levels=doc.get("levels"),
            sparsifier=SparsifierConfig.from_dict(sp) if sp else None,
            eps_list=tuple(grids.get("eps", ())),
        )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return ExperimentConfig.from_document(json.loads(path.read_text()), path.parent)


def resolve_spec(cfg: ExperimentConfig):
    """The concrete spec (running the sparsifier for adaptive specs) and its certificates."""
    if not cfg.spec.adaptive:
        return cfg.spec, []
    sp = cfg.sparsifier or SparsifierConfig(threads=cfg.threads)
    return generate_spec(cfg.spec.v_rule, cfg.levels, sp)


@dataclass(frozen=True)
class ResultRow:
    n: int
    x: float
    a: float
    b: float
    ratio: complex
    target: float
    abs_err: float
    level: int
    error: str | None = None


def _task(x, n, pairs, params, compensated):
    level = params.active_level(n)
    good, bad = [], []
    for a, b in pairs:
        try:
            KernelQuery(x, a, b, n)
            good.append((a, b))
        except ValueError as exc:
            bad.append(((a, b), str(exc)))
    rows = []
    if good:
        method = "recurrence" if compensated else "jump"
        g = kernel_grid(x, n, good, params, method=method, compensated=compensated)
        for (a, b), r, t, e in zip(good, g.ratio, g.target, g.abs_err):
            rows.append(ResultRow(n, x, a, b, complex(r), float(np.real(t)), float(e), level))
    for (a, b), msg in bad:
        log.warning("skipping query x=%s n=%s a=%s b=%s: %s", x, n, a, b, msg)
        rows.append(ResultRow(n, x, a, b, complex(math.nan, math.nan), math.nan, math.nan, level, msg))
    return rows


def run_universality_sweep(cfg: ExperimentConfig, spec: SparseSpec | None = None) -> list:
    """Kernel ratio against the sine target for every ``(x, n, a, b)``; rows sorted by key.

    Each ``(x, n)`` is one task sharing a single evaluation pass over its
    distinct points; tasks run on ``cfg.threads`` workers and are collected in
    key order, so output does not depend on the thread count.
    """
    if spec is None:
        spec, _ = resolve_spec(cfg)
    params = JacobiParams(spec)
    keys = sorted((x, n) for x in cfg.x_list for n in cfg.n_list)

    def work(key):
        return _task(key[0], key[1], cfg.ab_grid, params, cfg.compensated)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            chunks = list(ex.map(work, keys))
    else:
        chunks = [work(k) for k in keys]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.x, r.n, r.a, r.b))
    return rows


@dataclass(frozen=True)
class ConvergenceTable:
    n_list: tuple
    max_err: tuple
    thresholds: dict

    def least_n(self, eps: float):
        return self.thresholds.get(eps)


def run_convergence_table(cfg: ExperimentConfig, eps_list=None, spec: SparseSpec | None = None) -> ConvergenceTable:
    """Sup of ``abs_err`` over the ``(x, a, b)`` grid for each n, plus the least n reaching each eps."""
    rows = run_universality_sweep(cfg, spec)
    eps_list = cfg.eps_list if eps_list is None else tuple(eps_list)
    worst = {n: 0.0 for n in cfg.n_list}
    for r in rows:
        if r.error is None:
            worst[r.n] = max(worst[r.n], r.abs_err)
    max_err = tuple(worst[n] for n in cfg.n_list)
    thresholds = {}
    for eps in eps_list:
        thresholds[eps] = next((n for n, e in zip(cfg.n_list, max_err) if e <= eps), None)
    return ConvergenceTable(cfg.n_list, max_err, thresholds)


def quadrature_approx(n: int, params: JacobiParams, chunk: int = 512):
    """Gauss nodes and weights from the n x n truncated Jacobi matrix.

    Nodes are the eigenvalues, weights the squared first eigenvector
    components.  Eigenvectors are requested in index chunks so memory stays
    O(n * chunk).
    """
    if not 1 <= n <= 5000:
        raise ValueError("quadrature order must be in [1, 5000]")
    d = np.array([b_at(k, params) for k in range(1, n + 1)], dtype=float)
    if n == 1:
        return d.copy(), np.ones(1)
    e = np.ones(n - 1)
    nodes = eigh_tridiagonal(d, e, eigvals_only=True)
    weights = np.empty(n)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk) - 1
        _, vecs = eigh_tridiagonal(d, e, select="i", select_range=(lo, hi))
        weights[lo:hi + 1] = vecs[0] ** 2
    return nodes, weights


def _fmt(v) -> str:
    return f"{v:.17g}"


def _open_for_write(path):
    if hasattr(path, "write"):
        return contextlib.nullcontext(path)
    path = Path(path)
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_results(rows, path) -> None:
    """Rows as CSV with header ``n,x,a,b,ratio_re,ratio_im,target,abs_err,level``."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_HEADER)
        for r in rows:
            w.writerow([r.n, _fmt(r.x), _fmt(r.a), _fmt(r.b), _fmt(r.ratio.real), _fmt(r.ratio.imag),
                        _fmt(r.target), _fmt(r.abs_err), r.level])


def read_results(path) -> list:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != ROW_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            ResultRow(int(n), float(x), float(a), float(b), complex(float(rr), float(ri)),
                      float(t), float(e), int(lv))
            for n, x, a, b, rr, ri, t, e, lv in reader
        ]


def emit_table(table: ConvergenceTable, path, plot_path=None) -> None:
    """One ``n,max_abs_err`` line per order, then an ``eps,least_n`` section when thresholds exist."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for n, e in zip(table.n_list, table.max_err):
            w.writerow([n, _fmt(e)])
        if table.thresholds:
            w.writerow([])
            w.writerow(("eps", "least_n"))
            for eps, n in table.thresholds.items():
                w.writerow([_fmt(eps), "" if n is None else n])
    if plot_path is not None:
        plot_table(table, plot_path)


def plot_table(table: ConvergenceTable, path) -> None:
    """Log-log line plot of max error against n, saved as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "sparsejacobi"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(table.n_list, table.max_err, "o-")
    ax.set_xlabel("n")
    ax.set_ylabel("max |ratio - sine target|")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_quadrature(nodes, weights, path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUAD_HEADER)
        for x, wt in zip(nodes, weights):
            w.writerow([_fmt(x), _fmt(wt)])


def emit_spec(spec: SparseSpec, path, certificates=()) -> None:
    """Spec document with the certificate chain embedded."""
    extra = {"certificates": [c.to_dict() for c in certificates]} if certificates else None
    dump_spec(spec, path, extra)


def certificates_from_document(doc: dict) -> list:
    return [GapCertificate.from_dict(d) for d in doc.get("certificates", [])]

