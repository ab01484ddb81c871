"""Symmetric B-spline SIAC kernels and their exact convolution with DG fields.

The kernel is

    K(t) = sum_{g=0}^{r} c_g B_l(t - x_g),   x_g = -ceil(r/2) + g,

scaled as ``K_H(x) = K(x / H) / H``.  ``B_l`` is the centred cardinal
B-spline of order ``l`` (degree ``l - 1``).  The weights ``c_g`` make the
kernel reproduce polynomials up to degree ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from siacgpc.dg import DgField, DgMultiField, Mesh1D, basis_values
from siacgpc.errors import ArgumentError, ConfigurationError


def bspline(ell: int, x):
    """Centred cardinal B-spline of order ``ell`` (Cox-de Boor on knots -ell/2..ell/2)."""
    if ell < 1:
        raise ArgumentError(f"B-spline order must be >= 1, got {ell}")
    x = np.asarray(x, dtype=float)
    knots = -ell / 2.0 + np.arange(ell + 1)
    # degree-0 pieces on [t_i, t_{i+1})
    N = [((knots[i] <= x) & (x < knots[i + 1])).astype(float) for i in range(ell)]
    for p in range(1, ell):
        N = [
            ((x - knots[i]) * N[i] + (knots[i + p + 1] - x) * N[i + 1]) / p
            for i in range(ell - p)
        ]
    val = N[0]
    return float(val) if val.ndim == 0 else val


@lru_cache(maxsize=None)
def bspline_moments(ell: int, n_max: int) -> tuple[Fraction, ...]:
    """Exact monomial moments ``int B_ell(x) x^i dx`` for i = 0..n_max."""
    half = Fraction(1, 2)
    box = [(half ** (i + 1) - (-half) ** (i + 1)) / (i + 1) for i in range(n_max + 1)]
    m = list(box)
    for _ in range(ell - 1):
        m = [sum(math.comb(i, t) * m[t] * box[i - t] for t in range(i + 1)) for i in range(n_max + 1)]
    return tuple(m)


def kernel_offsets(r: int) -> list[int]:
    return [-math.ceil(r / 2) + g for g in range(r + 1)]


def _solve_exact(M: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(M)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(a[i][col]))
        if a[piv][col] == 0:
            raise ArithmeticError("singular moment system")
        a[col], a[piv] = a[piv], a[col]
        for i in range(col + 1, n):
            f = a[i][col] / a[col][col]
            if f:
                for j in range(col, n + 1):
                    a[i][j] -= f * a[col][j]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        x[i] = (a[i][n] - sum(a[i][j] * x[j] for j in range(i + 1, n))) / a[i][i]
    return x


@lru_cache(maxsize=None)
def kernel_coefficients_exact(r: int, ell: int) -> tuple[Fraction, ...]:
    """Rational kernel weights from the moment system ``M c = e_0``."""
    if r < 0:
        raise ArgumentError(f"number of moments must be >= 0, got {r}")
    if ell < 1:
        raise ArgumentError(f"B-spline order must be >= 1, got {ell}")
    mom = bspline_moments(ell, r)
    shifts = [Fraction(s) for s in kernel_offsets(r)]
    # int B(x - s) x^j dx = sum_i C(j, i) s^(j-i) m_i
    M = [
        [sum(math.comb(j, i) * s ** (j - i) * mom[i] for i in range(j + 1)) for s in shifts]
        for j in range(r + 1)
    ]
    rhs = [Fraction(1)] + [Fraction(0)] * r
    return tuple(_solve_exact(M, rhs))


def kernel_coefficients(r: int, ell: int) -> np.ndarray:
    return np.array([float(c) for c in kernel_coefficients_exact(r, ell)])


@dataclass(frozen=True)
class SiacKernel:
    r: int
    ell: int
    H: float
    offsets: np.ndarray
    coeffs: np.ndarray
    breakpoints: np.ndarray  # scaled coordinates, sorted

    @property
    def support(self) -> tuple[float, float]:
        """Support in scaled coordinates."""
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def support_radius(self) -> float:
        lo, hi = self.support
        return max(-lo, hi) * self.H

    def __call__(self, t):
        """Unscaled kernel ``K(t)``."""
        t = np.asarray(t, dtype=float)
        return sum(c * bspline(self.ell, t - s) for c, s in zip(self.coeffs, self.offsets))

    def scaled(self, x):
        """``K_H(x) = K(x / H) / H``."""
        return self(np.asarray(x, dtype=float) / self.H) / self.H


def build_kernel(r: int, ell: int, H: float) -> SiacKernel:
    if not H > 0:
        raise ArgumentError(f"kernel scaling must be positive, got {H}")
    offsets = np.array(kernel_offsets(r), dtype=float)
    knots = -ell / 2.0 + np.arange(ell + 1)
    breaks = np.unique((offsets[:, None] + knots[None, :]).ravel())
    return SiacKernel(r, ell, float(H), offsets, kernel_coefficients(r, ell), breaks)


def default_kernel(k: int, h: float) -> SiacKernel:
    """``r = 2k`` moments with order ``k + 1`` splines, scaled by the mesh width."""
    return build_kernel(2 * k, k + 1, h)


def check_support(kernel: SiacKernel, mesh: Mesh1D) -> None:
    lo, hi = kernel.support
    width = (hi - lo) * kernel.H
    if width > mesh.length * (1 + 1e-12):
        min_nx = math.ceil((hi - lo) * kernel.H / mesh.h - 1e-9)
        raise ConfigurationError(
            f"kernel support {width:.4g} exceeds domain length {mesh.length:.4g}; "
            f"need Nx >= {min_nx} for r={kernel.r}, l={kernel.ell}"
        )


def _gauss_count(k: int, ell: int) -> int:
    return math.ceil((k + ell) / 2) + 1


def stencil(kernel: SiacKernel, mesh: Mesh1D, k: int, theta: float, n_gauss: int | None = None):
    """Convolution weights for a point at relative position ``theta`` in a cell.

    Returns ``(m0, W)`` such that the filtered value at ``x = x_{i-1/2} + theta h``
    equals ``sum_m W[m] @ coeffs[(i + m0 + m) % Nx]``.  The integral is split
    at the kernel breakpoints and the cell edges, so each piece is a
    polynomial integrated exactly by Gauss quadrature.
    """
    ng = _gauss_count(k, kernel.ell) if n_gauss is None else n_gauss
    xg, wg = np.polynomial.legendre.leggauss(ng)
    rho = kernel.H / mesh.h
    # y in cell units, the evaluation point sits at theta inside cell 0
    y_breaks = theta - rho * kernel.breakpoints
    lo, hi = y_breaks.min(), y_breaks.max()
    edges = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
    pts = np.unique(np.concatenate([y_breaks, edges]))
    p0, p1 = pts[:-1], pts[1:]
    keep = (p1 - p0) > 1e-13 * max(1.0, rho)
    p0, p1 = p0[keep], p1[keep]
    cells = np.floor(0.5 * (p0 + p1)).astype(int)
    y = 0.5 * (p0 + p1)[:, None] + 0.5 * (p1 - p0)[:, None] * xg[None, :]
    w = 0.5 * (p1 - p0)[:, None] * wg[None, :] / rho
    kvals = kernel((theta - y) / rho)
    xi = 2.0 * (y - cells[:, None]) - 1.0
    phi = basis_values(k, xi)  # (k+1, pieces, ng)
    contrib = np.einsum("pg,jpg->pj", w * kvals, phi)
    m0 = int(cells.min())
    W = np.zeros((int(cells.max()) - m0 + 1, k + 1))
    np.add.at(W, cells - m0, contrib)
    return m0, W


def filter_cells(coeffs: np.ndarray, mesh: Mesh1D, k: int, kernel: SiacKernel, thetas,
                 n_gauss: int | None = None) -> np.ndarray:
    """Filtered values at ``x_{i-1/2} + theta h`` for every cell and every theta.

    ``coeffs`` has shape ``(..., Nx, k+1)``; the result has shape
    ``(..., Nx, len(thetas))``.
    """
    check_support(kernel, mesh)
    coeffs = np.asarray(coeffs)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    out = np.zeros(coeffs.shape[:-1] + (thetas.size,))
    for t_idx, theta in enumerate(thetas):
        m0, W = stencil(kernel, mesh, k, float(theta), n_gauss)
        acc = np.zeros(coeffs.shape[:-1])
        for m in range(W.shape[0]):
            acc += np.roll(coeffs, -(m0 + m), axis=-2) @ W[m]
        out[..., t_idx] = acc
    return out


def filter_point(field: DgField, kernel: SiacKernel, x, n_gauss: int | None = None) -> float:
    """Filtered value of a periodic DG field at one point."""
    i, xi = field.mesh.locate(x)
    theta = 0.5 * (float(xi) + 1.0)
    check_support(kernel, field.mesh)
    m0, W = stencil(kernel, field.mesh, field.k, theta, n_gauss)
    Nx = field.mesh.Nx
    idx = (int(i) + m0 + np.arange(W.shape[0])) % Nx
    return float(np.sum(field.coeffs[idx] * W))


def filter_multifield(v: DgMultiField, kernel: SiacKernel, sample_points) -> np.ndarray:
    """Filtered values of every mode at the sample points, shape ``(n_modes, n_points)``."""
    check_support(kernel, v.mesh)
    x = np.atleast_1d(np.asarray(sample_points, dtype=float))
    cell, xi = v.mesh.locate(x)
    theta = 0.5 * (xi + 1.0)
    out = np.empty((v.n_modes, x.size))
    Nx = v.mesh.Nx
    cache: dict[float, tuple[int, np.ndarray]] = {}
    for p in range(x.size):
        key = round(float(theta[p]), 14)
        if key not in cache:
            cache[key] = stencil(kernel, v.mesh, v.k, float(theta[p]))
        m0, W = cache[key]
        idx = (int(cell[p]) + m0 + np.arange(W.shape[0])) % Nx
        out[:, p] = np.einsum("nmj,mj->n", v.coeffs[:, idx, :], W)
    return out


def smoothness_breaks(kernel: SiacKernel, mesh: Mesh1D) -> np.ndarray:
    """Relative cell positions in [0, 1) where a filtered DG field changes polynomial piece."""
    rho = kernel.H / mesh.h
    frac = np.mod(rho * kernel.breakpoints, 1.0)
    frac[np.isclose(frac, 1.0, atol=1e-12)] = 0.0
    frac[np.isclose(frac, 0.0, atol=1e-12)] = 0.0
    return np.unique(np.round(frac, 12))
