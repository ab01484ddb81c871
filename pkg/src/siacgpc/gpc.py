"""Legendre chaos for a uniform random variable and the stochastic Galerkin matrix.

The random variable ``y`` is uniform on (-1, 1) with density 1/2.  All
polynomials here are orthonormal with respect to that density, so the
quadrature weights sum to one and ``E[P_n P_m] = delta_nm``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from siacgpc.errors import ArgumentError, ConfigurationError

WaveSpeed = Callable[[np.ndarray], np.ndarray]


def _legendre_beta(n_max: int) -> np.ndarray:
    # b_n = n / sqrt(4 n^2 - 1); b_0 is unused and set to zero
    n = np.arange(n_max + 1, dtype=float)
    beta = np.zeros(n_max + 1)
    beta[1:] = n[1:] / np.sqrt(4.0 * n[1:] ** 2 - 1.0)
    return beta


def _eval_recurrence(alpha: np.ndarray, beta: np.ndarray, n_max: int, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = (y - alpha[0]) / beta[1]
    for n in range(1, n_max):
        out[n + 1] = ((y - alpha[n]) * out[n] - beta[n] * out[n - 1]) / beta[n + 1]
    return out


def legendre_orthonormal(n: int, y):
    """Evaluate the orthonormal Legendre polynomial of degree ``n`` at ``y``.

    Equals ``sqrt(2n+1) * P_n(y)`` with ``P_n`` the classical Legendre
    polynomial; computed by the three-term recurrence.
    """
    if n < 0:
        raise ArgumentError(f"degree must be non-negative, got {n}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(np.abs(y_arr) > 1.0 + 1e-14):
        raise ArgumentError("evaluation point outside [-1, 1]")
    beta = _legendre_beta(max(n, 1))
    vals = _eval_recurrence(np.zeros(n + 1), beta, n, y_arr)[n]
    return float(vals) if vals.ndim == 0 else vals


def legendre_table(n_max: int, y) -> np.ndarray:
    """Values of degrees 0..n_max at the points ``y``; shape ``(n_max+1,) + y.shape``."""
    if n_max < 0:
        raise ArgumentError(f"degree must be non-negative, got {n_max}")
    return _eval_recurrence(np.zeros(n_max + 1), _legendre_beta(max(n_max, 1)), n_max, y)


def gauss_legendre_rule(Q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on (-1, 1) with weights normalised to sum to one."""
    if Q < 1:
        raise ArgumentError(f"node count must be >= 1, got {Q}")
    nodes, weights = np.polynomial.legendre.leggauss(Q)
    return nodes, 0.5 * weights


@dataclass(frozen=True)
class GpcBasis:
    N: int
    alpha: np.ndarray
    beta: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def legendre(cls, N: int, Q: int | None = None) -> "GpcBasis":
        if N < 0:
            raise ArgumentError(f"truncation degree must be >= 0, got {N}")
        Q = N + 4 if Q is None else Q
        if Q < N + 1:
            raise ConfigurationError(f"{Q} quadrature nodes cannot resolve degree {N}")
        nodes, weights = gauss_legendre_rule(Q)
        return cls(N, np.zeros(N + 1), _legendre_beta(N + 1), nodes, weights)

    def evaluate(self, y) -> np.ndarray:
        """Basis values at ``y``, shape ``(N+1,) + y.shape``."""
        return _eval_recurrence(self.alpha, self.beta, self.N, y)

    def gram(self) -> np.ndarray:
        P = self.evaluate(self.nodes)
        return (P * self.weights) @ P.T

    def project(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Chaos coefficients ``E[f P_n]`` for n = 0..N by quadrature."""
        P = self.evaluate(self.nodes)
        return P @ (self.weights * np.asarray(f(self.nodes), dtype=float))


def assemble_system_matrix(basis: GpcBasis, c: WaveSpeed) -> np.ndarray:
    """Galerkin matrix ``a_nk = E[c(y) P_n(y) P_k(y)]``, built from the upper triangle."""
    P = basis.evaluate(basis.nodes)
    cw = basis.weights * np.asarray(c(basis.nodes), dtype=float)
    n = basis.N + 1
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            A[i, j] = np.sum(cw * P[i] * P[j])
            A[j, i] = A[i, j]
    return A


def eig_sym(A: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(S, lam)`` with ``S.T @ A @ S = diag(lam)``, eigenvalues sorted
    in descending order and each eigenvector's largest-magnitude entry made
    positive.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ArgumentError("matrix must be square")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-14:
        raise ArgumentError("matrix is not symmetric")
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.sqrt(np.sum(A[offdiag] ** 2)) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise ConfigurationError("Jacobi iteration did not converge")

    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    V = V[:, order]
    for j in range(n):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V, lam


def split_spectrum(lam, tol: float | None = None):
    """Split eigenvalues into positive part, negative part and the zero index set.

    ``lam_plus + lam_minus`` equals ``lam`` except on the zero set, where
    both are zero.
    """
    lam = np.asarray(lam, dtype=float)
    if tol is None:
        tol = 1e-12 * np.max(np.abs(lam), initial=0.0)
    lam_plus = np.where(lam > tol, lam, 0.0)
    lam_minus = np.where(lam < -tol, lam, 0.0)
    zeros = np.flatnonzero(np.abs(lam) <= tol)
    return lam_plus, lam_minus, zeros


@dataclass(frozen=True)
class GpcSystem:
    basis: GpcBasis
    A: np.ndarray
    S: np.ndarray
    lam: np.ndarray
    zero_modes: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def n_plus(self) -> int:
        return int(np.count_nonzero(self.lam_effective > 0))

    @property
    def n_minus(self) -> int:
        return int(np.count_nonzero(self.lam_effective < 0))

    @property
    def lam_max(self) -> float:
        return float(np.max(np.abs(self.lam)))

    @property
    def lam_effective(self) -> np.ndarray:
        """Eigenvalues with the numerically-zero ones set to exactly zero."""
        lam = self.lam.copy()
        lam[self.zero_modes] = 0.0
        return lam


def build_system(N: int, c: WaveSpeed | None = None, Q: int | None = None) -> GpcSystem:
    """Assemble and diagonalise the Galerkin system for wave speed ``c`` (default ``c(y) = y``).

    The assembly is repeated on a finer rule; disagreement beyond 1e-12
    means ``Q`` does not integrate ``c P_n P_k`` exactly.
    """
    if c is None:
        c = _identity
    basis = GpcBasis.legendre(N, Q)
    A = assemble_system_matrix(basis, c)
    A_fine = assemble_system_matrix(GpcBasis.legendre(N, len(basis.nodes) + N + 8), c)
    if np.max(np.abs(A - A_fine)) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ConfigurationError(
            f"{len(basis.nodes)} quadrature nodes are insufficient for the wave speed at N={N}"
        )
    S, lam = eig_sym(A)
    _, _, zeros = split_spectrum(lam)
    return GpcSystem(basis, A, S, lam, zeros)


def _identity(y):
    return np.asarray(y, dtype=float)
