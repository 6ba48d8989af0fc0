"""Command-line entry point: ``sparsejacobi <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .harness import (
    ExperimentConfig,
    emit_quadrature,
    emit_results,
    emit_spec,
    emit_table,
    load_config,
    quadrature_approx,
    resolve_spec,
    run_convergence_table,
    run_universality_sweep,
)
from .jacobi import JacobiParams, Rule, SparseSpec, load_spec
from .sparsifier import SparsifierConfig, classify_measure, generate_spec

log = logging.getLogger("sparsejacobi")


def parse_floats(text: str) -> list:
    return [float(t) for t in text.split(",") if t.strip()]


def parse_ints(text: str) -> list:
    return [int(float(t)) for t in text.split(",") if t.strip()]


def parse_ab_grid(text: str) -> list:
    """``lo:hi:k`` for a k x k lattice, or explicit pairs ``a,b;a,b``."""
    if ";" not in text and text.count(":") == 2:
        lo, hi, k = text.split(":")
        axis = np.linspace(float(lo), float(hi), int(k))
        return [(float(a), float(b)) for a in axis for b in axis]
    pairs = []
    for chunk in text.split(";"):
        a, b = parse_floats(chunk)
        pairs.append((a, b))
    return pairs


def parse_rule(text: str) -> Rule:
    """``power:EXP[:SCALE]``, ``geometric:RATIO[:SCALE]``, ``zero`` or ``explicit:v1,v2,...``."""
    kind, _, rest = text.partition(":")
    if kind == "zero":
        return Rule.zero()
    if kind == "explicit":
        return Rule.explicit(parse_floats(rest))
    args = [float(t) for t in rest.split(":") if t]
    if kind == "power":
        return Rule.power(*args)
    if kind == "geometric":
        return Rule.geometric(*args)
    raise argparse.ArgumentTypeError(f"unknown rule {text!r}")


def _spec_from_args(args) -> SparseSpec:
    if args.spec:
        return load_spec(args.spec)[0]
    if args.rule:
        sites = parse_ints(args.sites) if args.sites else ()
        return SparseSpec(parse_rule(args.rule), tuple(sites))
    return SparseSpec.free()


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        overrides = {}
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.compensated:
            overrides["compensated"] = True
        if overrides:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
        return cfg
    ab = parse_ab_grid(args.ab_grid)
    if args.random_ab:
        rng = np.random.default_rng(args.seed)
        lo, hi = min(min(p) for p in ab), max(max(p) for p in ab)
        ab = [tuple(float(v) for v in rng.uniform(lo, hi, 2)) for _ in range(args.random_ab)]
    return ExperimentConfig(
        spec=_spec_from_args(args),
        x_list=parse_floats(args.x),
        ab_grid=ab,
        n_list=parse_ints(args.n_list),
        compensated=args.compensated,
        threads=args.threads or 1,
        levels=args.levels,
        eps_list=tuple(parse_floats(args.eps)) if getattr(args, "eps", None) else (),
    )


def _out_path(args, cfg, key):
    return args.out or cfg.outputs.get(key)


def cmd_universality(args) -> int:
    cfg = _config_from_args(args)
    spec, _ = resolve_spec(cfg)
    rows = run_universality_sweep(cfg, spec)
    out = _out_path(args, cfg, "rows")
    emit_results(rows, out or sys.stdout)
    bad = sum(r.error is not None for r in rows)
    if bad:
        log.warning("%d rows carry error markers", bad)
    return 0


def cmd_table(args) -> int:
    cfg = _config_from_args(args)
    spec, _ = resolve_spec(cfg)
    table = run_convergence_table(cfg, spec=spec)
    out = _out_path(args, cfg, "table") or sys.stdout
    emit_table(table, out, plot_path=args.plot or cfg.outputs.get("plot"))
    return 0


def cmd_sparsify(args) -> int:
    rule = load_spec(args.spec)[0].v_rule if args.spec else parse_rule(args.rule or "power:0.5")
    cfg = SparsifierConfig(threads=args.threads or 1, n_cap=args.n_cap,
                           tolerance_slack=args.slack)
    spec, certs = generate_spec(rule, args.levels, cfg)
    if args.out:
        emit_spec(spec, args.out, certs)
    print(f"{'level':>5} {'N':>10} {'v':>10} {'max_kernel_error':>18} {'ratio_A_max':>12}")
    for cert, site, v in zip(certs, spec.sites, spec.couplings):
        print(f"{cert.level:>5} {site:>10} {v:>10.6g} {cert.max_kernel_error:>18.6g} {cert.ratio_A_max:>12.6g}")
    return 0


def cmd_classify(args) -> int:
    target = _spec_from_args(args) if (args.spec or args.rule) else None
    if target is None:
        print("classify needs --spec or --rule", file=sys.stderr)
        return 2
    print(classify_measure(target))
    return 0


def cmd_quadrature(args) -> int:
    spec = _spec_from_args(args)
    nodes, weights = quadrature_approx(args.n, JacobiParams(spec))
    emit_quadrature(nodes, weights, args.out or sys.stdout)
    return 0


def _add_common(p, grids=True):
    p.add_argument("--spec", help="spec document (JSON)")
    p.add_argument("--rule", help="coupling rule, e.g. power:0.5 or explicit:0.3,0.2")
    p.add_argument("--sites", help="comma-separated sites N_1,N_2,... for --rule")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=0, help="seed for randomized (a, b) grids")
    if grids:
        p.add_argument("--config", help="config document with spec/grids/outputs sections")
        p.add_argument("--x", default="0", help="comma-separated bulk points")
        p.add_argument("--ab-grid", default="0:1:2", help="lo:hi:k lattice or a,b;a,b pairs")
        p.add_argument("--n-list", default="1000,10000", help="comma-separated orders")
        p.add_argument("--compensated", action="store_true", help="double-double recurrence")
        p.add_argument("--levels", type=int, default=None, help="levels for an adaptive spec")
        p.add_argument("--random-ab", type=int, default=0,
                       help="draw this many random (a, b) pairs inside the --ab-grid box")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsejacobi", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("universality", help="kernel-ratio sweep against the sine kernel")
    _add_common(p)
    p.set_defaults(func=cmd_universality)

    p = sub.add_parser("table", help="max error per n and least n reaching each eps")
    _add_common(p)
    p.add_argument("--eps", help="comma-separated eps targets")
    p.add_argument("--plot", help="write an SVG plot of max error against n")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sparsify", help="place sites level by level with gap certificates")
    _add_common(p, grids=False)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--n-cap", type=int, default=10 ** 7)
    p.add_argument("--slack", type=float, default=0.5)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("classify", help="sum-of-squares verdict for the spectral measure")
    _add_common(p, grids=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("quadrature", help="Gauss nodes and weights of the truncated matrix")
    _add_common(p, grids=False)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_quadrature)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
