"""Case assembly, refinement studies, kernel sweeps and table output."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from siacgpc import __version__
from siacgpc.dg import build_mesh, deterministic_initial, from_characteristic, to_characteristic, upwind_operator
from siacgpc.errors import ArgumentError, ConfigurationError
from siacgpc.gpc import build_system
from siacgpc.siac import build_kernel, check_support
from siacgpc.statistics import MEASURES, ErrorReport, ExactOracle, compute_errors, convergence_orders, error_curves
from siacgpc.timestepping import DEFAULT_CFL, integrate, make_time_plan

logger = logging.getLogger(__name__)

WORKERS_ENV = "SIACGPC_WORKERS"
TABLE_MESHES = (10, 20, 40, 80, 160)
TABLE_N = (5, 6, 7, 8)
TABLE_K = (1, 2)


def default_cfl(k: int) -> float:
    return DEFAULT_CFL


@dataclass(frozen=True)
class CaseConfig:
    N: int = 8
    k: int = 1
    Nx: int = 20
    T: float = 1.0
    cfl: float | None = None
    a: float = 0.0
    b: float = 2.0 * math.pi
    filter: bool = True
    r: int | None = None
    l: int | None = None
    quad_y: int | None = None
    q_err: int | None = None

    def __post_init__(self):
        for name in ("N", "k"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.Nx < 1:
            raise ConfigurationError(f"Nx must be >= 1, got {self.Nx}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be > 0, got {self.T}")
        if self.cfl is not None and not self.cfl > 0:
            raise ConfigurationError(f"cfl must be > 0, got {self.cfl}")
        if not self.b > self.a:
            raise ConfigurationError(f"need b > a, got a={self.a}, b={self.b}")
        if self.r is not None and self.r < 0:
            raise ConfigurationError(f"r must be >= 0, got {self.r}")
        if self.l is not None and self.l < 1:
            raise ConfigurationError(f"l must be >= 1, got {self.l}")

    @property
    def cfl_value(self) -> float:
        return default_cfl(self.k) if self.cfl is None else self.cfl

    @property
    def filter_params(self) -> tuple[int, int] | None:
        if not self.filter:
            return None
        r = 2 * self.k if self.r is None else self.r
        ell = self.k + 1 if self.l is None else self.l
        return r, ell

    def to_dict(self) -> dict:
        return asdict(self)

    def key(self) -> tuple:
        fp = self.filter_params or (-1, -1)
        return (self.N, self.k, self.Nx, fp[0], fp[1])

    def config_hash(self) -> str:
        return config_hash(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CaseConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


CONFIG_KEYS_HELP = {
    "N": "gPC truncation degree (int, or list of ints for study)",
    "k": "DG polynomial degree (int, or list of ints for study)",
    "Nx": "number of cells",
    "T": "final time",
    "cfl": "CFL constant; null selects 0.1 (dt = cfl*h/lam_max for k=1, cfl*h^(5/3)/lam_max for k=2)",
    "a": "left end of the periodic domain",
    "b": "right end of the periodic domain",
    "filter": "apply the SIAC filter (bool)",
    "r": "number of kernel moments; null selects 2k",
    "l": "B-spline order; null selects k+1",
    "quad_y": "quadrature nodes for assembling the gPC matrix; null selects N+4",
    "q_err": "Gauss points per cell for error integrals; null selects k+4",
}


def config_hash(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def solve(config: CaseConfig):
    """Run the DG-gPC solver to the final time; returns ``(system, mesh, v)`` with ``v`` physical."""
    system = build_system(config.N, Q=config.quad_y)
    mesh = build_mesh(config.a, config.b, config.Nx)
    kernel = _kernel(config, mesh)
    if kernel is not None:
        check_support(kernel, mesh)
    v0 = deterministic_initial(np.cos, mesh, config.k, config.N)
    q0 = to_characteristic(v0, system.S)
    op = upwind_operator(system.lam_effective, mesh, config.k)
    plan = make_time_plan(config.T, mesh.h, system.lam_max, config.k, config.cfl_value)
    qT = q0.with_coeffs(integrate(q0.coeffs, plan, op))
    return system, mesh, from_characteristic(qT, system.S)


def _kernel(config: CaseConfig, mesh):
    fp = config.filter_params
    if fp is None:
        return None
    return build_kernel(fp[0], fp[1], mesh.h)


def run_case(config: CaseConfig, curves: bool = False):
    """Full pipeline for one case.

    Returns an ``ErrorReport``; with ``curves=True`` returns ``(report, curves)``
    where ``curves`` holds pointwise errors at 10 points per cell.
    """
    t0 = time.perf_counter()
    _, mesh, v = solve(config)
    oracle = ExactOracle(config.T)
    kernel = _kernel(config, mesh)
    raw = compute_errors(v, oracle, None, config.q_err)
    filt = compute_errors(v, oracle, kernel, config.q_err) if kernel is not None else None
    fp = config.filter_params
    report = ErrorReport(
        N=config.N, k=config.k, Nx=config.Nx, T=config.T, cfl=config.cfl_value,
        r=fp[0] if fp else None, ell=fp[1] if fp else None,
        filtered=filt, **raw,
    )
    report.meta["wall_time"] = time.perf_counter() - t0
    if curves:
        return report, error_curves(v, oracle, kernel)
    return report


@dataclass
class CaseResult:
    config: CaseConfig
    report: ErrorReport | None
    error: str | None = None
    curves: dict | None = None


@dataclass
class StudyResult:
    cases: list[CaseResult] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def sorted(self) -> "StudyResult":
        return StudyResult(sorted(self.cases, key=lambda c: c.config.key()), self.meta)

    def table(self, measure: str) -> list[dict]:
        """Rows of one convergence table, orders computed within each (N, k, r, l) group."""
        rows = []
        groups: dict[tuple, list[CaseResult]] = {}
        for case in self.sorted().cases:
            key = case.config.key()
            groups.setdefault((key[0], key[1], key[3], key[4]), []).append(case)
        for _, cases in sorted(groups.items()):
            raw = [_value(c, measure, False) for c in cases]
            filt = [_value(c, measure, True) for c in cases]
            o_raw, o_filt = convergence_orders(raw), convergence_orders(filt)
            for i, case in enumerate(cases):
                if i > 0 and case.config.Nx != 2 * cases[i - 1].config.Nx:
                    o_raw[i] = o_filt[i] = math.nan
                fp = case.config.filter_params
                rows.append({
                    "N": case.config.N, "k": case.config.k, "Nx": case.config.Nx,
                    "error_unfiltered": raw[i], "order_unfiltered": o_raw[i],
                    "error_filtered": filt[i], "order_filtered": o_filt[i],
                    "r": fp[0] if fp else None, "l": fp[1] if fp else None,
                    "status": case.error or "",
                })
        return rows


def _value(case: CaseResult, measure: str, filtered: bool) -> float:
    if case.report is None:
        return math.nan
    return case.report.value(measure, filtered)


def _run_one(args) -> CaseResult:
    config, want_curves = args
    try:
        if want_curves:
            report, curves = run_case(config, curves=True)
            return CaseResult(config, report, None, curves)
        return CaseResult(config, run_case(config))
    except Exception as exc:  # recorded per case, the study carries on
        logger.warning("case %s failed: %s", config.key(), exc)
        return CaseResult(config, None, f"{type(exc).__name__}: {exc}")


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_cases(configs: Iterable[CaseConfig], curves: bool = False, workers: int | None = None) -> StudyResult:
    configs = list(configs)
    n = worker_count(workers)
    jobs = [(c, curves) for c in configs]
    if n == 1 or len(jobs) <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_one, jobs))
    return StudyResult(results).sorted()


def check_meshes(meshes: Sequence[int]) -> list[int]:
    meshes = [int(m) for m in meshes]
    if not meshes:
        raise ArgumentError("need at least one mesh")
    for prev, cur in zip(meshes[:-1], meshes[1:]):
        if cur != 2 * prev:
            raise ArgumentError(f"meshes must double at each step, got {prev} -> {cur}")
    return meshes


def run_convergence_study(base: CaseConfig, meshes: Sequence[int], N_values: Sequence[int] | None = None,
                          k_values: Sequence[int] | None = None, workers: int | None = None) -> StudyResult:
    meshes = check_meshes(meshes)
    N_values = [base.N] if N_values is None else list(N_values)
    k_values = [base.k] if k_values is None else list(k_values)
    configs = [replace(base, N=N, k=k, Nx=Nx) for N in N_values for k in k_values for Nx in meshes]
    result = run_cases(configs, workers=workers)
    result.meta.update({"kind": "study", "meshes": meshes, "N": N_values, "k": k_values,
                        "base": base.to_dict()})
    return result


def run_kernel_sweep(base: CaseConfig, vary: str, values: Sequence[int], workers: int | None = None) -> StudyResult:
    """Vary the B-spline order (``vary='l'``, r = 2k) or the moment count (``vary='r'``, l = k+1)."""
    if vary not in ("l", "r"):
        raise ArgumentError(f"vary must be 'l' or 'r', got {vary!r}")
    if vary == "l":
        configs = [replace(base, filter=True, r=2 * base.k, l=int(v)) for v in values]
    else:
        configs = [replace(base, filter=True, l=base.k + 1, r=int(v)) for v in values]
    result = run_cases(configs, curves=True, workers=workers)
    result.meta.update({"kind": "sweep", "vary": vary, "values": list(values), "base": base.to_dict()})
    return result


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if not math.isfinite(x):
            return ""
        return f"{x:.5e}"
    return str(x)


TABLE_COLUMNS = ("N", "k", "Nx", "error_unfiltered", "order_unfiltered", "error_filtered",
                 "order_filtered", "r", "l", "status")


def emit_tables(result: StudyResult, path: str | os.PathLike) -> list[Path]:
    """Write one CSV per error measure, curve CSVs and a JSON manifest into ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for measure in MEASURES:
        target = out / f"{measure}.csv"
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_COLUMNS)
            for row in result.table(measure):
                w.writerow([_fmt(row[c]) for c in TABLE_COLUMNS])
        written.append(target)

    for case in result.sorted().cases:
        if not case.curves:
            continue
        N, k, Nx, r, ell = case.config.key()
        for stat in ("mean", "var"):
            target = out / "curves" / f"{stat}_N{N}_k{k}_Nx{Nx}_r{r}_l{ell}.csv"
            target.parent.mkdir(exist_ok=True)
            filt = case.curves.get(f"{stat}_filtered")
            with open(target, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("x", "error_unfiltered", "error_filtered"))
                for i, x in enumerate(case.curves["x"]):
                    w.writerow((_fmt(float(x)), _fmt(float(case.curves[f"{stat}_unfiltered"][i])),
                                _fmt(float(filt[i])) if filt is not None else ""))
            written.append(target)

    manifest = {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "study": result.meta,
        "config_hash": config_hash({"meta": result.meta,
                                    "cases": [c.config.to_dict() for c in result.sorted().cases]}),
        "cases": [
            {
                "config": c.config.to_dict(),
                "config_hash": c.config.config_hash(),
                "wall_time": c.report.meta.get("wall_time") if c.report else None,
                "error": c.error,
            }
            for c in result.sorted().cases
        ],
    }
    target = out / "manifest.json"
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(target)
    return written


def paper_tables(workers: int | None = None, meshes: Sequence[int] = TABLE_MESHES) -> StudyResult:
    """All cases behind the five convergence tables (N = 5..8, k = 1, 2, filtered and raw)."""
    result = run_convergence_study(CaseConfig(), meshes, TABLE_N, TABLE_K, workers=workers)
    result.meta["kind"] = "paper-tables"
    return result


def paper_figures(workers: int | None = None) -> dict[str, StudyResult]:
    """Data for the error-curve figure and both kernel sweeps."""
    comparison = run_cases([CaseConfig(N=5, k=2, Nx=20)], curves=True, workers=workers)
    comparison.meta.update({"kind": "comparison"})
    base = CaseConfig(N=5, k=1, Nx=20)
    return {
        "comparison": comparison,
        "sweep_l": run_kernel_sweep(base, "l", (1, 3, 4), workers=workers),
        "sweep_r": run_kernel_sweep(base, "r", (0, 2, 6), workers=workers),
    }


def plot_curves(result: StudyResult, path: str | os.PathLike) -> list[Path]:
    """PNG plots of the error curves (solid: raw, dashed: filtered)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for case in result.sorted().cases:
        if not case.curves:
            continue
        N, k, Nx, r, ell = case.config.key()
        fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
        for ax, stat, title in zip(axes, ("mean", "var"), ("mean", "variance")):
            x = case.curves["x"]
            ax.semilogy(x, case.curves[f"{stat}_unfiltered"], "-", label="DG-gPC")
            if f"{stat}_filtered" in case.curves:
                ax.semilogy(x, case.curves[f"{stat}_filtered"], "--", label="filtered")
            ax.set_title(f"{title}, N={N}, P{k}, Nx={Nx}, r={r}, l={ell}")
            ax.set_xlabel("x")
            ax.legend()
        fig.tight_layout()
        target = out / f"curves_N{N}_k{k}_Nx{Nx}_r{r}_l{ell}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written
