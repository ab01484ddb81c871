import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from siacgpc.errors import ArgumentError, ConfigurationError
from siacgpc.gpc import (
    GpcBasis,
    assemble_system_matrix,
    build_system,
    eig_sym,
    gauss_legendre_rule,
    legendre_orthonormal,
    legendre_table,
    split_spectrum,
)


def test_low_degree_values():
    y = np.linspace(-1, 1, 7)
    assert np.allclose(legendre_orthonormal(0, y), 1.0)
    assert np.allclose(legendre_orthonormal(1, y), math.sqrt(3) * y)
    assert np.allclose(legendre_orthonormal(2, y), math.sqrt(5) * (3 * y**2 - 1) / 2)


def test_matches_scaled_standard_legendre():
    y = np.linspace(-1, 1, 11)
    for n in range(12):
        ref = math.sqrt(2 * n + 1) * npleg.legval(y, [0] * n + [1])
        assert np.allclose(legendre_orthonormal(n, y), ref, atol=1e-12)


def test_invalid_arguments():
    with pytest.raises(ArgumentError):
        legendre_orthonormal(-1, 0.0)
    with pytest.raises(ArgumentError):
        legendre_orthonormal(2, 1.5)
    with pytest.raises(ConfigurationError):
        GpcBasis.legendre(6, Q=5)


def test_orthonormal_under_half_density():
    basis = GpcBasis.legendre(12)
    assert np.allclose(basis.gram(), np.eye(13), atol=1e-13)


def test_quadrature_weights_are_probability():
    y, w = gauss_legendre_rule(9)
    assert math.isclose(w.sum(), 1.0, rel_tol=1e-14)
    assert np.isclose(np.sum(w * y**16), 1 / 17, rtol=1e-13)


def test_system_matrix_is_jacobi_matrix():
    A = build_system(6).A
    n = np.arange(1, 7)
    b = n / np.sqrt(4 * n**2 - 1)
    expected = np.diag(b, 1) + np.diag(b, -1)
    assert np.allclose(A, expected, atol=1e-14)


def test_constant_speed_gives_scaled_identity():
    basis = GpcBasis.legendre(5)
    A = assemble_system_matrix(basis, lambda y: 2.5 * np.ones_like(y))
    assert np.allclose(A, 2.5 * np.eye(6), atol=1e-14)


@pytest.mark.parametrize("N", range(0, 13))
def test_spectrum_matches_gauss_nodes(N):
    # independent root finder for P_{N+1}
    roots = np.sort(npleg.legroots([0] * (N + 1) + [1]))[::-1]
    sysm = build_system(N)
    assert np.allclose(sysm.lam, roots, atol=1e-10)


def test_spectrum_antisymmetric_and_zero_mode():
    sysm = build_system(8)
    assert np.allclose(sysm.lam, -sysm.lam[::-1], atol=1e-14)
    assert list(sysm.zero_modes) == [4]
    assert sysm.n_plus == 4 and sysm.n_minus == 4
    assert sysm.lam_effective[4] == 0.0


def test_two_by_two_eigenvectors():
    sysm = build_system(1)
    r = 1 / math.sqrt(3)
    assert np.allclose(sysm.lam, [r, -r])
    s = 1 / math.sqrt(2)
    assert np.allclose(np.abs(sysm.S), s)
    assert np.allclose(sysm.A @ sysm.S, sysm.S * sysm.lam, atol=1e-15)


def test_split_spectrum():
    plus, minus, zero = split_spectrum(np.array([1.0, 0.0, -1.0]))
    assert list(plus) == [1.0, 0.0, 0.0]
    assert list(minus) == [0.0, 0.0, -1.0]
    assert list(zero) == [1]


def test_split_spectrum_even_and_odd_size():
    plus, minus, zero = split_spectrum(build_system(5).lam)
    assert np.count_nonzero(plus) == 3 and np.count_nonzero(minus) == 3 and zero.size == 0
    lam = build_system(8).lam
    plus, minus, zero = split_spectrum(lam)
    assert zero.size == 1
    recon = plus + minus
    recon[zero] = lam[zero]
    assert np.array_equal(recon, lam)


def test_spectral_reconstruction():
    sysm = build_system(10)
    A = sysm.S @ np.diag(sysm.lam) @ sysm.S.T
    assert np.max(np.abs(A - sysm.A)) <= 1e-12 * np.max(np.abs(sysm.A))


@st.composite
def symmetric_matrices(draw):
    n = draw(st.integers(1, 9))
    vals = draw(st.lists(st.floats(-10, 10, allow_nan=False), min_size=n * n, max_size=n * n))
    M = np.array(vals).reshape(n, n)
    return 0.5 * (M + M.T)


@settings(max_examples=60, deadline=None)
@given(symmetric_matrices())
def test_jacobi_eigensolver_properties(A):
    S, lam = eig_sym(A)
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(A))
    assert np.allclose(S.T @ S, np.eye(n), atol=1e-12)
    assert np.allclose(A @ S, S * lam, atol=1e-11 * scale)
    assert np.all(np.diff(lam) <= 1e-12 * scale)
    assert np.allclose(lam, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-11 * scale)
    # sign convention: largest-magnitude entry of each column is positive
    idx = np.argmax(np.abs(S), axis=0)
    assert np.all(S[idx, np.arange(n)] > 0)


def test_legendre_table_shape():
    y = np.linspace(-1, 1, 4)
    T = legendre_table(5, y)
    assert T.shape == (6, 4)
    assert np.allclose(T[3], legendre_orthonormal(3, y))
