"""Mean/variance reconstruction from chaos coefficients and the error measures.

For the orthonormal chaos basis the mean is the zeroth coefficient and the
variance is the sum of squares of the remaining ones.  Filtered statistics
filter each coefficient first and then square.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from siacgpc.dg import PHYSICAL, DgMultiField, Mesh1D, basis_values, eval_field
from siacgpc.errors import StateError
from siacgpc.gpc import gauss_legendre_rule, legendre_table
from siacgpc.siac import SiacKernel, filter_cells, filter_multifield, smoothness_breaks

_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class ExactOracle:
    """Closed-form solution of ``u_t = y u_x``, ``u(x, 0) = cos x``, y ~ U(-1, 1)."""

    t: float

    def u(self, x, y):
        return np.cos(np.asarray(x) + np.asarray(y) * self.t)

    def mean(self, x):
        t = self.t
        if abs(t) < _SERIES_CUTOFF:
            sinc = 1.0 - t * t / 6.0
        else:
            sinc = math.sin(t) / t
        return np.cos(np.asarray(x, dtype=float)) * sinc

    def variance(self, x):
        x = np.asarray(x, dtype=float)
        t = self.t
        if abs(t) < _SERIES_CUTOFF:
            # leading terms of the expansion in t
            c2 = np.cos(x) ** 2
            return t * t * np.sin(x) ** 2 / 3.0 + t**4 * (4.0 * c2 - 3.0) / 45.0
        return (
            0.5
            + np.cos(2.0 * x) * math.sin(2.0 * t) / (4.0 * t)
            - np.cos(x) ** 2 * math.sin(t) ** 2 / (t * t)
        )

    def chaos_coefficients(self, x, N: int, Q: int | None = None) -> np.ndarray:
        """Exact chaos coefficients ``E[u P_n]`` by quadrature in y, shape ``(N+1,) + x.shape``."""
        Q = max(N + 30, 40) if Q is None else Q
        y, w = gauss_legendre_rule(Q)
        P = legendre_table(N, y)
        x = np.asarray(x, dtype=float)
        ux = self.u(x[..., None], y)  # (..., Q)
        return np.moveaxis(ux @ (P * w).T, -1, 0)


class ModeSampler:
    """Point values of the chaos-coefficient fields, raw or SIAC-filtered."""

    def __init__(self, v: DgMultiField, kernel: SiacKernel | None = None):
        if v.representation != PHYSICAL:
            raise StateError(f"statistics need physical coefficients, got {v.representation}")
        self.v = v
        self.kernel = kernel

    @property
    def mesh(self) -> Mesh1D:
        return self.v.mesh

    @property
    def breaks(self) -> np.ndarray:
        """Relative positions inside each cell where the sampled function has kinks."""
        if self.kernel is None:
            return np.array([0.0])
        return smoothness_breaks(self.kernel, self.mesh)

    def on_cells(self, thetas) -> np.ndarray:
        """Values at ``x_{i-1/2} + theta h``; shape ``(n_modes, Nx, len(thetas))``.

        ``theta = 1`` gives the left limit at the right cell edge.
        """
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if self.kernel is None:
            phi = basis_values(self.v.k, 2.0 * thetas - 1.0)
            return self.v.coeffs @ phi
        return filter_cells(self.v.coeffs, self.mesh, self.v.k, self.kernel, thetas)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kernel is None:
            return np.stack([eval_field(f, x) for f in self.v.fields])
        return filter_multifield(self.v, self.kernel, x)


class StatisticSampler:
    """Mean or variance built from a ``ModeSampler``."""

    def __init__(self, modes: ModeSampler, kind: str):
        if kind not in ("mean", "variance"):
            raise ValueError(kind)
        self.modes = modes
        self.kind = kind

    @property
    def mesh(self) -> Mesh1D:
        return self.modes.mesh

    @property
    def breaks(self) -> np.ndarray:
        return self.modes.breaks

    def _reduce(self, vals: np.ndarray) -> np.ndarray:
        if self.kind == "mean":
            return vals[0]
        return np.sum(vals[1:] ** 2, axis=0)

    def on_cells(self, thetas) -> np.ndarray:
        return self._reduce(self.modes.on_cells(thetas))

    def __call__(self, x) -> np.ndarray:
        return self._reduce(self.modes(x))


def mean_field(v: DgMultiField, kernel: SiacKernel | None = None) -> StatisticSampler:
    return StatisticSampler(ModeSampler(v, kernel), "mean")


def variance_field(v: DgMultiField, kernel: SiacKernel | None = None) -> StatisticSampler:
    return StatisticSampler(ModeSampler(v, kernel), "variance")


def cell_rule(n_points: int, breaks: Sequence[float] = (0.0,)) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on the unit cell split at ``breaks``; weights sum to one."""
    xg, wg = np.polynomial.legendre.leggauss(n_points)
    pts = np.unique(np.concatenate([[0.0, 1.0], np.asarray(breaks, dtype=float)]))
    thetas, weights = [], []
    for p0, p1 in zip(pts[:-1], pts[1:]):
        thetas.append(p0 + 0.5 * (p1 - p0) * (xg + 1.0))
        weights.append(0.5 * (p1 - p0) * wg)
    return np.concatenate(thetas), np.concatenate(weights)


def _cell_points(mesh: Mesh1D, thetas: np.ndarray) -> np.ndarray:
    return mesh.edges[:-1, None] + mesh.h * thetas[None, :]


def default_error_points(k: int) -> int:
    return k + 4


def error_l2(approx, exact: Callable, mesh: Mesh1D, n_points: int, normalized: bool = False) -> float:
    """L2 norm of ``approx - exact`` by per-cell Gauss quadrature.

    With ``normalized=True`` the result is the root-mean-square error, i.e.
    the L2 norm divided by the square root of the domain length.
    """
    thetas, w = cell_rule(n_points, approx.breaks)
    diff = approx.on_cells(thetas) - exact(_cell_points(mesh, thetas))
    sq = mesh.h * np.sum(diff**2 * w)
    if normalized:
        sq /= mesh.length
    return float(math.sqrt(sq))


def error_linf(approx, exact: Callable, mesh: Mesh1D, n_points: int) -> float:
    """Max of ``|approx - exact|`` over Gauss points and both one-sided cell-edge traces."""
    thetas, _ = cell_rule(n_points, approx.breaks)
    thetas = np.concatenate([[0.0], thetas, [1.0]])
    diff = approx.on_cells(thetas) - exact(_cell_points(mesh, thetas))
    return float(np.max(np.abs(diff)))


def y_rule_size(N: int) -> int:
    return max(N + 10, 32)


def mean_square_error(modes: ModeSampler, oracle: ExactOracle, n_points: int,
                      Q_y: int | None = None) -> float:
    """``E[ ||u - v_h||^2_{L2} ]`` by Gauss quadrature in y (outer) and x (inner)."""
    mesh = modes.mesh
    N = modes.v.n_modes - 1
    Q_y = y_rule_size(N) if Q_y is None else Q_y
    y, wy = gauss_legendre_rule(Q_y)
    P = legendre_table(N, y)  # (N+1, Q)
    thetas, wx = cell_rule(n_points, modes.breaks)
    vals = modes.on_cells(thetas)  # (N+1, Nx, T)
    x = _cell_points(mesh, thetas)
    total = 0.0
    for q in range(Q_y):
        approx = np.tensordot(P[:, q], vals, axes=1)
        err = oracle.u(x, y[q]) - approx
        total += wy[q] * np.sum(err**2 * wx)
    return float(mesh.h * total)


def mean_square_error_parseval(modes: ModeSampler, oracle: ExactOracle, n_points: int,
                               N_tail: int = 40) -> float:
    """Same quantity via the chaos expansion: coefficient errors plus truncated tail."""
    mesh = modes.mesh
    N = modes.v.n_modes - 1
    thetas, wx = cell_rule(n_points, modes.breaks)
    x = _cell_points(mesh, thetas)
    u_hat = oracle.chaos_coefficients(x, N + N_tail)
    coeff_err = np.sum((u_hat[: N + 1] - modes.on_cells(thetas)) ** 2 * wx)
    tail = np.sum(u_hat[N + 1:] ** 2 * wx)
    return float(mesh.h * (coeff_err + tail))


def convergence_orders(errors: Sequence[float]) -> list[float]:
    """``log2(e_{i-1} / e_i)`` for consecutive entries; the first entry is NaN."""
    out = [math.nan]
    for prev, cur in zip(errors[:-1], errors[1:]):
        if prev is None or cur is None or not (prev > 0 and cur > 0):
            out.append(math.nan)
        else:
            out.append(math.log2(prev / cur))
    return out


def total_variation(values) -> float:
    return float(np.sum(np.abs(np.diff(np.asarray(values, dtype=float)))))


MEASURES = ("mean_square", "mean_l2", "mean_linf", "var_l2", "var_linf")


@dataclass
class ErrorReport:
    N: int
    k: int
    Nx: int
    T: float
    cfl: float
    r: int | None
    ell: int | None
    mean_square: float
    mean_l2: float
    mean_linf: float
    var_l2: float
    var_linf: float
    filtered: dict[str, float] | None = None
    meta: dict = field(default_factory=dict)

    def value(self, measure: str, filtered: bool = False) -> float:
        if filtered:
            return math.nan if self.filtered is None else self.filtered[measure]
        return getattr(self, measure)

    def as_dict(self) -> dict:
        return asdict(self)


def compute_errors(v: DgMultiField, oracle: ExactOracle, kernel: SiacKernel | None = None,
                   n_points: int | None = None) -> dict[str, float]:
    """The five error measures for raw (``kernel=None``) or filtered coefficients.

    Mean and variance L2 errors are domain-normalised (RMS); the mean-square
    error is the plain expectation of the squared L2 norm.
    """
    mesh = v.mesh
    n_points = default_error_points(v.k) if n_points is None else n_points
    modes = ModeSampler(v, kernel)
    mean = StatisticSampler(modes, "mean")
    var = StatisticSampler(modes, "variance")
    return {
        "mean_square": mean_square_error(modes, oracle, n_points),
        "mean_l2": error_l2(mean, oracle.mean, mesh, n_points, normalized=True),
        "mean_linf": error_linf(mean, oracle.mean, mesh, n_points),
        "var_l2": error_l2(var, oracle.variance, mesh, n_points, normalized=True),
        "var_linf": error_linf(var, oracle.variance, mesh, n_points),
    }


def error_curves(v: DgMultiField, oracle: ExactOracle, kernel: SiacKernel | None,
                 per_cell: int = 10) -> dict[str, np.ndarray]:
    """Pointwise ``|error|`` of mean and variance at ``per_cell`` uniform points per cell."""
    mesh = v.mesh
    thetas = (np.arange(per_cell) + 0.5) / per_cell
    x = _cell_points(mesh, thetas)
    out = {"x": x.ravel()}
    raw = ModeSampler(v).on_cells(thetas)
    filt = ModeSampler(v, kernel).on_cells(thetas) if kernel is not None else None
    for name, reduce, exact in (
        ("mean", lambda a: a[0], oracle.mean),
        ("var", lambda a: np.sum(a[1:] ** 2, axis=0), oracle.variance),
    ):
        ex = exact(x)
        out[f"{name}_unfiltered"] = np.abs(reduce(raw) - ex).ravel()
        if filt is not None:
            out[f"{name}_filtered"] = np.abs(reduce(filt) - ex).ravel()
    return out
