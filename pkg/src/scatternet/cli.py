"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 I/O error.  Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import analysis
from .analysis import (
    bidirectional_transparency,
    bragg_parallel_ep,
    detect_atr,
    evaluate_point,
    find_exceptional_points,
    find_spectral_singularities,
    sweep,
)
from .cells import ABRingSpec, BraggParams, bragg_matrix
from .config import ConfigError, RunConfig, ab_ring_node, load_config
from .core import ScatterNetError, pt_params, s_eigenvalues
from .formats import fmt, reports_json, sweep_csv
from .network import parallel_identical, serial_identical
from .selftest import run_all

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, config=True):
    if config:
        p.add_argument("--config", metavar="PATH", help="JSON run configuration (default: %(default)s)")
    p.add_argument("--out", metavar="DIR", help="output directory; overrides output.directory (default: %(default)s)")
    p.add_argument("--steps", type=int, metavar="N", help="grid points; overrides sweep.steps (default: %(default)s)")
    p.add_argument("--tol", type=float, metavar="X", help="finder tolerance (default: %(default)s, i.e. per-command default)")
    p.add_argument("--threads", type=int, metavar="N",
                   help="worker threads, 0 = auto; falls back to $SCATTERNET_THREADS (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, metavar="N", help="seed for randomized self-tests (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scatternet", description=__doc__.splitlines()[0],
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("compose", help="print the effective matrix and amplitudes", formatter_class=fmt_cls)
    _common(p)
    p.add_argument("--at", type=float, metavar="X", help="value of the sweep parameter (default: %(default)s, i.e. parameters block or sweep.lo)")

    p = sub.add_parser("sweep", help="write a CSV sweep", formatter_class=fmt_cls)
    _common(p)

    p = sub.add_parser("singularities", help="locate spectral singularities", formatter_class=fmt_cls)
    _common(p)
    p.add_argument("--kind", choices=["lasing", "cpa"], help="zero of M22 (lasing) or M11 (cpa) (default: %(default)s, i.e. config or lasing)")

    p = sub.add_parser("exceptional-points", help="locate exceptional points", formatter_class=fmt_cls)
    _common(p)
    p.add_argument("--mode", choices=["single", "serial", "parallel"], help="coupling mode (default: %(default)s, i.e. config or single)")
    p.add_argument("--N", type=int, help="number of coupled cells (default: %(default)s, i.e. config or 1)")

    p = sub.add_parser("atr", help="detect anisotropic transmission resonances", formatter_class=fmt_cls)
    _common(p)

    p = sub.add_parser("ab-ring", help="two-arm ring preset", formatter_class=fmt_cls)
    _common(p, config=False)
    p.add_argument("--k", type=float, default=1.0, help="lead wavevector")
    p.add_argument("--L", type=float, default=2 * math.pi, help="ring circumference")
    p.add_argument("--L1", type=float, default=None, help="length of arm 1 (default: L/2)")
    p.add_argument("--flux-phase", type=float, default=0.0, help="flux phase psi = -e Phi/(hbar c)")

    p = sub.add_parser("bragg", help="PT Bragg grating preset", formatter_class=fmt_cls)
    _common(p, config=False)
    p.add_argument("--n0", type=float, default=1.5)
    p.add_argument("--n1", type=float, default=0.01)
    p.add_argument("--n2", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.0, help="detuning beta - k")
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--L", type=float, default=1.0, help="grating length")
    p.add_argument("--N", type=int, default=1, help="number of cells")
    p.add_argument("--mode", choices=["single", "serial", "parallel"], default="single")

    p = sub.add_parser("selftest", help="run the oracle-equivalence suites", formatter_class=fmt_cls)
    _common(p, config=False)
    return parser


def _threads(args) -> int:
    n = args.threads
    if n is None:
        env = os.environ.get("SCATTERNET_THREADS")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise _UsageError(f"SCATTERNET_THREADS must be an integer, got {env!r}")
        else:
            n = 1
    if n < 0:
        raise _UsageError("--threads must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _load(args) -> RunConfig:
    if not args.config:
        raise _UsageError("--config PATH is required for this command")
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise OSError(f"cannot read config: {exc}") from exc
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return cfg


def _sweep_spec(cfg: RunConfig, args):
    if cfg.sweep is None:
        raise ConfigError(["/sweep: a sweep block is required for this command"])
    steps = args.steps if args.steps is not None else cfg.sweep.steps
    if steps < 2:
        raise ConfigError(["/sweep/steps: must be >= 2"])
    return cfg.sweep.lo, cfg.sweep.hi, steps


def _out_path(cfg: RunConfig | None, args, suffix: str) -> Path:
    directory = Path(args.out or (cfg.output["directory"] if cfg else "."))
    base = cfg.output["basename"] if cfg else "run"
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{base}{suffix}"


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}")


def _print_matrix(M):
    for row in M.mat:
        print("  " + "  ".join(f"{fmt(z.real):>24} {fmt(z.imag):>24}j" for z in row))


def _print_point(rec):
    M = rec.matrix
    if M is not None:
        print("M =")
        _print_matrix(M)
        print(f"det = {fmt(M.det.real)} {fmt(M.det.imag)}j")
    print(f"t = {fmt(rec.t.real)} {fmt(rec.t.imag)}j")
    print(f"r_left = {fmt(rec.r_left.real)} {fmt(rec.r_left.imag)}j")
    print(f"r_right = {fmt(rec.r_right.real)} {fmt(rec.r_right.imag)}j")
    print(f"T = {fmt(rec.T)}")
    print(f"R_left = {fmt(rec.R_left)}")
    print(f"R_right = {fmt(rec.R_right)}")
    print(f"eig_ratio = {fmt(rec.eig_ratio)}  phase = {analysis.classify_phase(rec.eig_ratio)}")
    if rec.flags:
        print(f"flags: {';'.join(rec.flags)}", file=sys.stderr)


def _numeric_failure(rec) -> bool:
    return any(f.startswith("error:") for f in rec.flags) and "oracle_amplitudes" not in rec.flags


def cmd_compose(args) -> int:
    cfg = _load(args)
    params = {}
    if args.at is not None:
        if cfg.sweep is None:
            raise _UsageError("--at needs a sweep block naming the parameter")
        params[cfg.sweep.parameter] = args.at
    elif cfg.sweep is not None and cfg.sweep.parameter not in cfg.parameters:
        params[cfg.sweep.parameter] = cfg.sweep.lo
    node = cfg.build(params)
    rec = evaluate_point(lambda _: node, math.nan)
    _print_point(rec)
    return EXIT_NUMERIC if _numeric_failure(rec) else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    lo, hi, steps = _sweep_spec(cfg, args)
    records = sweep(cfg.family(), lo, hi, steps, threads=_threads(args))
    _write(_out_path(cfg, args, ".csv"), sweep_csv(records))
    failed = sum(_numeric_failure(r) for r in records)
    if failed:
        print(f"{failed} of {len(records)} points failed to compose", file=sys.stderr)
    return EXIT_OK


def cmd_singularities(args) -> int:
    cfg = _load(args)
    lo, hi, steps = _sweep_spec(cfg, args)
    opts = cfg.analysis("singularities")
    kind = args.kind or opts.get("entry", "lasing")
    tol = args.tol if args.tol is not None else float(opts.get("tol", analysis.DEFAULT_TOL))
    reports = find_spectral_singularities(cfg.family(), lo, hi, kind, tol=tol, steps=steps,
                                          threads=_threads(args))
    for r in reports:
        print(f"{kind} omega_c = {fmt(r.omega_c)} residual = {r.residual:.3e}")
    _write(_out_path(cfg, args, "_singularities.json"), reports_json({"kind": kind, "tol": tol, "reports": reports}))
    return EXIT_OK


def cmd_exceptional_points(args) -> int:
    cfg = _load(args)
    lo, hi, steps = _sweep_spec(cfg, args)
    opts = cfg.analysis("exceptional_points")
    mode = args.mode or opts.get("mode", "single")
    N = args.N if args.N is not None else int(opts.get("N", 1))
    tol = args.tol if args.tol is not None else float(opts.get("tol", analysis.DEFAULT_TOL))
    diagnostics: list = []
    try:
        reports = find_exceptional_points(cfg.family(), lo, hi, mode, N, tol=tol, steps=steps,
                                          threads=_threads(args), diagnostics=diagnostics)
    except ValueError as exc:
        raise _UsageError(str(exc))
    for d in diagnostics:
        print(d, file=sys.stderr)
    for r in reports:
        print(f"{mode} EP omega = {fmt(r.omega)} sign {r.branch_sign} residual = {r.residual:.3e} {r.crossing}")
    _write(_out_path(cfg, args, "_exceptional_points.json"),
           reports_json({"mode": mode, "N": N, "tol": tol, "reports": reports}))
    return EXIT_OK


def cmd_atr(args) -> int:
    cfg = _load(args)
    lo, hi, steps = _sweep_spec(cfg, args)
    tol = args.tol if args.tol is not None else float(cfg.analysis("atr").get("tol", analysis.ATR_TOL))
    records = sweep(cfg.family(), lo, hi, steps, threads=_threads(args))
    found = detect_atr(records, tol)
    both = bidirectional_transparency(records, tol)
    for a in found:
        print(f"ATR omega = {fmt(a.omega)} reflectionless from {a.direction}")
    _write(_out_path(cfg, args, "_atr.json"),
           reports_json({"tol": tol, "atr": found, "bidirectional_transparency": both}))
    return EXIT_OK


def cmd_ab_ring(args) -> int:
    try:
        ring = ABRingSpec.from_flux_phase(args.k, args.flux_phase, args.L, args.L1)
    except ValueError as exc:
        raise _UsageError(str(exc))
    node = ab_ring_node(ring)
    rec = evaluate_point(lambda _: node, args.flux_phase)
    _print_point(rec)
    if args.out:
        steps = args.steps or 201
        fam = lambda psi: ab_ring_node(ABRingSpec.from_flux_phase(args.k, psi, args.L, args.L1))
        records = sweep(fam, 0.0, 2 * math.pi, steps, threads=_threads(args))
        _write(_out_path(None, args, "_ab_ring.csv"), sweep_csv(records))
    return EXIT_NUMERIC if _numeric_failure(rec) else EXIT_OK


def cmd_bragg(args) -> int:
    try:
        p = BraggParams.from_detuning(args.n0, args.n1, args.n2, args.delta, args.k, args.L)
        m = bragg_matrix(p, args.k)
    except ValueError as exc:
        raise _UsageError(str(exc))
    if args.N < 1:
        raise _UsageError("--N must be >= 1")
    if args.mode == "serial":
        M = serial_identical(m, args.N)
    elif args.mode == "parallel":
        M = parallel_identical(m, args.N)
    else:
        M = m
    rec = evaluate_point(lambda _: M, args.delta)
    _print_point(rec)
    atr = detect_atr([rec], args.tol if args.tol is not None else analysis.ATR_TOL)
    print(f"unidirectional_invisibility = {bool(atr)}" + (f" ({atr[0].direction})" if atr else ""))
    ev = s_eigenvalues(pt_params(M))
    summary = {"matrix": M.mat, "t": rec.t, "r_left": rec.r_left, "r_right": rec.r_right,
               "eig_ratio": ev.ratio, "atr": atr}
    if args.mode == "parallel":
        n2 = bragg_parallel_ep(args.n0, args.n1, args.delta, args.k, args.N)
        print(f"parallel_invisibility_n2 = {fmt(n2)}")
        summary["parallel_invisibility_n2"] = n2
    if args.out:
        _write(_out_path(None, args, "_bragg.json"), reports_json(summary))
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_all(args.seed)
    width = max(len(r[0]) for r in results)
    for name, ok, worst, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  worst={worst:.2e}  {detail}")
    return EXIT_OK if all(r[1] for r in results) else EXIT_NUMERIC


COMMANDS = {
    "compose": cmd_compose,
    "sweep": cmd_sweep,
    "singularities": cmd_singularities,
    "exceptional-points": cmd_exceptional_points,
    "atr": cmd_atr,
    "ab-ring": cmd_ab_ring,
    "bragg": cmd_bragg,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, _UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScatterNetError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
