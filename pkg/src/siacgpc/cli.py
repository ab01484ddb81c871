"""Command line entry point: ``siacgpc {run,study,sweep,paper-tables,paper-figures}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from siacgpc import __version__
from siacgpc.errors import ArgumentError, ConfigurationError
from siacgpc.harness import (
    CONFIG_KEYS_HELP,
    TABLE_MESHES,
    WORKERS_ENV,
    CaseConfig,
    emit_tables,
    paper_figures,
    paper_tables,
    plot_curves,
    run_cases,
    run_convergence_study,
    run_kernel_sweep,
)
from siacgpc.statistics import MEASURES

log = logging.getLogger("siacgpc")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _filter_pair(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected r,l got {text!r}")
    return vals[0], vals[1]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return data


def _apply_overrides(data: dict, args: argparse.Namespace) -> dict:
    data = dict(data)
    for key in ("N", "k", "Nx", "T", "cfl"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "filter", None) is not None:
        data["filter"] = True
        data["r"], data["l"] = args.filter
    if getattr(args, "no_filter", False):
        data["filter"] = False
    return data


def _split_lists(data: dict) -> tuple[dict, list[int] | None, list[int] | None]:
    data = dict(data)
    Ns = data.pop("N") if isinstance(data.get("N"), list) else None
    ks = data.pop("k") if isinstance(data.get("k"), list) else None
    if Ns is not None:
        data["N"] = Ns[0]
    if ks is not None:
        data["k"] = ks[0]
    return data, Ns, ks


def _summary(result) -> None:
    for case in result.cases:
        c = case.config
        if case.report is None:
            print(f"N={c.N} k={c.k} Nx={c.Nx}: FAILED {case.error}")
            continue
        rep = case.report
        line = " ".join(f"{m}={rep.value(m):.3e}" for m in MEASURES)
        print(f"N={c.N} k={c.k} Nx={c.Nx}: {line}")
        if rep.filtered:
            line = " ".join(f"{m}={rep.value(m, True):.3e}" for m in MEASURES)
            print(f"{'':>{len(f'N={c.N} k={c.k} Nx={c.Nx}')}}  filtered r={rep.r} l={rep.ell}: {line}")


def cmd_run(args) -> int:
    data = _apply_overrides(load_config(args.config), args)
    data, Ns, ks = _split_lists(data)
    config = CaseConfig.from_dict(data)
    result = run_cases([config], curves=True, workers=1)
    _summary(result)
    if args.out:
        emit_tables(result, args.out)
    return 0 if all(c.error is None for c in result.cases) else 1


def cmd_study(args) -> int:
    data = _apply_overrides(load_config(args.config), args)
    data, Ns, ks = _split_lists(data)
    base = CaseConfig.from_dict(data)
    result = run_convergence_study(base, args.meshes, Ns, ks, workers=args.workers)
    _summary(result)
    emit_tables(result, args.out)
    return 0


def cmd_sweep(args) -> int:
    data = _apply_overrides(load_config(args.config), args)
    data, _, _ = _split_lists(data)
    base = CaseConfig.from_dict(data)
    result = run_kernel_sweep(base, args.vary, args.values, workers=args.workers)
    _summary(result)
    emit_tables(result, args.out)
    if args.plot:
        plot_curves(result, Path(args.out) / "plots")
    return 0


def cmd_paper_tables(args) -> int:
    result = paper_tables(workers=args.workers, meshes=args.meshes)
    emit_tables(result, args.out)
    failed = [c for c in result.cases if c.error]
    print(f"{len(result.cases)} cases, {len(failed)} failed; tables in {args.out}")
    return 0 if not failed else 1


def cmd_paper_figures(args) -> int:
    for name, result in paper_figures(workers=args.workers).items():
        out = Path(args.out) / name
        emit_tables(result, out)
        if args.plot:
            plot_curves(result, out / "plots")
        print(f"{name}: {len(result.cases)} cases -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<8} {v}" for k, v in CONFIG_KEYS_HELP.items())
    epilog = (
        "config file keys (JSON object, all optional; command-line flags override):\n"
        f"{keys}\n\n"
        f"environment:\n  {WORKERS_ENV}  number of worker processes for studies (default 1)"
    )
    parser = argparse.ArgumentParser(
        prog="siacgpc",
        description="DG-gPC transport solver with SIAC post-processing of the chaos coefficients.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def case_flags(p, with_filter=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--N", type=int, help="gPC truncation degree")
        p.add_argument("--k", type=int, help="DG polynomial degree")
        p.add_argument("--Nx", type=int, help="number of cells")
        p.add_argument("--T", type=float, help="final time")
        p.add_argument("--cfl", type=float, help="CFL constant")
        if with_filter:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--filter", type=_filter_pair, metavar="R,L", help="kernel moments and spline order")
            g.add_argument("--no-filter", action="store_true", help="skip post-processing")

    def workers_flag(p):
        p.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("run", help="run one case", epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    case_flags(p)
    p.add_argument("--out", help="directory for CSV/JSON output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("study", help="mesh-refinement study", epilog=epilog,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    case_flags(p)
    p.add_argument("--meshes", type=_int_list, default=list(TABLE_MESHES), help="comma-separated, doubling")
    p.add_argument("--out", default="results/study")
    workers_flag(p)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("sweep", help="kernel parameter sweep", epilog=epilog,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    case_flags(p, with_filter=False)
    p.add_argument("--vary", choices=("l", "r"), required=True)
    p.add_argument("--values", type=_int_list, required=True)
    p.add_argument("--out", default="results/sweep")
    p.add_argument("--plot", action="store_true", help="also write PNG plots (matplotlib)")
    workers_flag(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("paper-tables", help="all cases of the five convergence tables")
    p.add_argument("--out", default="results/paper-tables")
    p.add_argument("--meshes", type=_int_list, default=list(TABLE_MESHES))
    workers_flag(p)
    p.set_defaults(func=cmd_paper_tables)

    p = sub.add_parser("paper-figures", help="error-curve comparison and both kernel sweeps")
    p.add_argument("--out", default="results/paper-figures")
    p.add_argument("--plot", action="store_true", help="also write PNG plots (matplotlib)")
    workers_flag(p)
    p.set_defaults(func=cmd_paper_figures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ArgumentError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
