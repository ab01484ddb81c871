import math
from fractions import Fraction

import numpy as np
import pytest

from siacgpc.dg import DgField, DgMultiField, build_mesh, project_l2
from siacgpc.errors import ArgumentError, ConfigurationError
from siacgpc.siac import (
    build_kernel,
    bspline,
    default_kernel,
    filter_cells,
    filter_multifield,
    filter_point,
    kernel_coefficients,
    kernel_coefficients_exact,
    smoothness_breaks,
)

TWO_PI = 2 * math.pi


def test_bspline_low_orders():
    assert bspline(1, 0.0) == 1.0 and bspline(1, 0.75) == 0.0
    assert bspline(2, 0.0) == 1.0
    assert bspline(2, 0.5) == 0.5 and bspline(2, -0.5) == 0.5
    assert bspline(3, 0.0) == 0.75


def test_quadratic_bspline_by_numerical_convolution():
    # B3 = B2 * B1, integrated with a fine midpoint rule
    s = np.linspace(-0.5, 0.5, 200001)
    s = 0.5 * (s[1:] + s[:-1])
    for x in (0.0, 0.3, -1.1, 1.4):
        conv = np.mean(np.maximum(0.0, 1.0 - np.abs(x - s)))
        assert math.isclose(bspline(3, x), conv, abs_tol=1e-9)


@pytest.mark.parametrize("ell", [1, 2, 3, 4, 5])
def test_bspline_unit_mass_and_support(ell):
    x, w = np.polynomial.legendre.leggauss(10)
    total = 0.0
    knots = -ell / 2 + np.arange(ell + 1)
    for a, b in zip(knots[:-1], knots[1:]):
        total += 0.5 * (b - a) * np.sum(w * bspline(ell, 0.5 * (a + b) + 0.5 * (b - a) * x))
    assert math.isclose(total, 1.0, rel_tol=1e-14)
    assert bspline(ell, ell / 2 + 1e-9) == 0.0


def test_bspline_rejects_order_zero():
    with pytest.raises(ArgumentError):
        bspline(0, 0.0)


def test_coefficients_exact_values():
    assert kernel_coefficients_exact(0, 3) == (Fraction(1),)
    assert kernel_coefficients_exact(2, 2) == (Fraction(-1, 12), Fraction(7, 6), Fraction(-1, 12))
    c = kernel_coefficients(2, 2)
    assert np.allclose(c, [-1 / 12, 7 / 6, -1 / 12], atol=1e-14, rtol=0)


def test_coefficients_r4_l3_symmetric():
    c = kernel_coefficients_exact(4, 3)
    assert c == c[::-1]
    assert sum(c) == 1


def _kernel_moment(kernel, j):
    x, w = np.polynomial.legendre.leggauss(20)
    bp = kernel.breakpoints
    total = 0.0
    for a, b in zip(bp[:-1], bp[1:]):
        t = 0.5 * (a + b) + 0.5 * (b - a) * x
        total += 0.5 * (b - a) * np.sum(w * kernel(t) * t**j)
    return total


@pytest.mark.parametrize("r", range(7))
@pytest.mark.parametrize("ell", range(1, 5))
def test_moment_conditions(r, ell):
    K = build_kernel(r, ell, 1.0)
    for j in range(r + 1):
        assert abs(_kernel_moment(K, j) - (1.0 if j == 0 else 0.0)) <= 1e-12


def test_scaled_kernel_reproduces_polynomials():
    K = build_kernel(4, 3, 0.3)
    rng = np.random.default_rng(0)
    x, w = np.polynomial.legendre.leggauss(20)
    bp = K.breakpoints * K.H
    for x0 in rng.uniform(-2, 2, 20):
        for j in range(5):
            total = 0.0
            for a, b in zip(bp[:-1], bp[1:]):
                s = 0.5 * (a + b) + 0.5 * (b - a) * x
                total += 0.5 * (b - a) * np.sum(w * K.scaled(s) * (x0 - s) ** j)
            assert math.isclose(total, x0**j, abs_tol=1e-10)


def test_kernel_geometry():
    box = build_kernel(0, 1, 0.5)
    assert box.support == (-0.5, 0.5) and math.isclose(box.support_radius, 0.25)
    hat = build_kernel(2, 2, 1.0)
    assert hat.breakpoints.tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert hat.support_radius == 2.0
    assert math.isclose(default_kernel(2, 0.1).support_radius, 0.35)


def test_support_check():
    m = build_mesh(0, TWO_PI, 3)
    f = project_l2(np.cos, m, 1)
    with pytest.raises(ConfigurationError, match="need Nx >= 4"):
        filter_point(f, build_kernel(2, 2, m.h), 1.0)
    with pytest.raises(ArgumentError):
        build_kernel(2, 2, 0.0)


@pytest.mark.parametrize("r,ell,k", [(2, 2, 1), (4, 3, 2), (0, 1, 0), (3, 4, 2)])
def test_constant_reproduction(r, ell, k):
    m = build_mesh(0, TWO_PI, 20)
    f = project_l2(lambda x: np.ones_like(x), m, k)
    K = build_kernel(r, ell, m.h)
    vals = filter_cells(f.coeffs, m, k, K, np.linspace(0, 1, 7))
    assert np.allclose(vals, 1.0, atol=1e-13, rtol=0)


@pytest.mark.parametrize("deg", [0, 1, 2])
def test_polynomial_reproduction_away_from_wrap(deg):
    # global polynomial on a long mesh; evaluate far from the periodic seam
    m = build_mesh(0, 10, 40)
    k = 2
    f = project_l2(lambda x: (x - 5.0) ** deg, m, k)
    K = build_kernel(2, 2, m.h)
    for x in (4.1, 5.0, 5.33, 6.2):
        assert math.isclose(filter_point(f, K, x), (x - 5.0) ** deg, abs_tol=1e-12)


def test_filtered_projection_superconverges():
    errs = []
    for Nx in (40, 80, 160):
        m = build_mesh(0, TWO_PI, Nx)
        f = project_l2(np.cos, m, 1)
        vals = filter_cells(f.coeffs, m, 1, build_kernel(2, 2, m.h), [0.5])[:, 0]
        errs.append(np.max(np.abs(vals - np.cos(m.centers))))
    assert all(math.log2(a / b) > 2.8 for a, b in zip(errs, errs[1:]))


def test_mass_conservation():
    m = build_mesh(0, TWO_PI, 16)
    rng = np.random.default_rng(1)
    f = DgField(m, 2, rng.standard_normal((16, 3)))
    K = build_kernel(4, 3, m.h)
    xg, wg = np.polynomial.legendre.leggauss(6)
    thetas = []
    weights = []
    # filtered field is piecewise polynomial with kinks at these positions
    pts = np.unique(np.concatenate([[0.0], smoothness_breaks(K, m), [1.0]]))
    for a, b in zip(pts[:-1], pts[1:]):
        thetas.append(a + 0.5 * (b - a) * (xg + 1))
        weights.append(0.5 * (b - a) * wg)
    vals = filter_cells(f.coeffs, m, 2, K, np.concatenate(thetas))
    mass = m.h * np.sum(vals * np.concatenate(weights))
    assert math.isclose(mass, f.integral(), abs_tol=1e-12)


def test_symmetry():
    m = build_mesh(-math.pi, math.pi, 20)
    f = project_l2(lambda x: np.exp(np.cos(x)), m, 2)
    K = build_kernel(4, 3, m.h)
    for x in (0.3, 1.27, 2.9):
        assert math.isclose(filter_point(f, K, x), filter_point(f, K, -x), abs_tol=1e-12)


def test_doubling_gauss_points_is_invisible():
    m = build_mesh(0, TWO_PI, 20)
    f = project_l2(np.sin, m, 2)
    K = build_kernel(4, 3, m.h)
    for x in (0.1, 2.0, 4.4444):
        a = filter_point(f, K, x)
        b = filter_point(f, K, x, n_gauss=8)
        assert abs(a - b) <= 1e-13


def test_multifield_matches_single_field():
    m = build_mesh(0, TWO_PI, 12)
    rng = np.random.default_rng(2)
    v = DgMultiField(m, 1, rng.standard_normal((3, 12, 2)))
    K = build_kernel(2, 2, m.h)
    x = np.array([0.2, 3.3, 6.0])
    out = filter_multifield(v, K, x)
    for n in range(3):
        assert np.allclose(out[n], [filter_point(v.mode(n), K, xi) for xi in x], atol=1e-14)


def test_mode_zero_constant_field():
    m = build_mesh(0, TWO_PI, 10)
    c = np.zeros((3, 10, 2))
    c[0, :, 0] = math.sqrt(2)
    out = filter_multifield(DgMultiField(m, 1, c), build_kernel(2, 2, m.h), np.linspace(0, 6, 9))
    assert np.allclose(out[0], 1.0, atol=1e-13) and np.allclose(out[1:], 0.0)


def test_smoothness_breaks():
    m = build_mesh(0, 1, 10)
    assert smoothness_breaks(build_kernel(2, 2, m.h), m).tolist() == [0.0]
    # odd-order splines have half-integer knots, so kinks sit at cell midpoints
    assert smoothness_breaks(build_kernel(4, 3, m.h), m).tolist() == [0.5]
