"""Modal discontinuous Galerkin space on a periodic uniform mesh.

Each cell carries coefficients with respect to the scaled Legendre basis
``phi_j(xi) = sqrt((2j+1)/2) P_j(xi)`` on the reference interval [-1, 1],
which is orthonormal there.  The physical mass matrix is therefore
``h/2 * I`` and the semidiscrete scheme is explicit without a solve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from siacgpc.errors import ArgumentError, StateError

PHYSICAL = "physical"
CHARACTERISTIC = "characteristic"


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    Nx: int

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.Nx

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def edges(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.Nx + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.h * (np.arange(self.Nx) + 0.5)

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Cell index and reference coordinate of (periodically wrapped) points."""
        s = np.mod((np.asarray(x, dtype=float) - self.a) / self.h, self.Nx)
        i = np.minimum(np.floor(s).astype(int), self.Nx - 1)
        return i, 2.0 * (s - i) - 1.0


def build_mesh(a: float, b: float, Nx: int) -> Mesh1D:
    if Nx < 1:
        raise ArgumentError(f"cell count must be >= 1, got {Nx}")
    if not b > a:
        raise ArgumentError(f"need b > a, got a={a}, b={b}")
    return Mesh1D(float(a), float(b), int(Nx))


def basis_values(k: int, xi) -> np.ndarray:
    """Reference basis values, shape ``(k+1,) + xi.shape``."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty((k + 1,) + xi.shape)
    for j in range(k + 1):
        coef = np.zeros(j + 1)
        coef[j] = np.sqrt((2 * j + 1) / 2.0)
        out[j] = np.polynomial.legendre.legval(xi, coef)
    return out


def basis_derivatives(k: int, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((k + 1,) + xi.shape)
    for j in range(1, k + 1):
        coef = np.zeros(j + 1)
        coef[j] = np.sqrt((2 * j + 1) / 2.0)
        out[j] = np.polynomial.legendre.legval(xi, np.polynomial.legendre.legder(coef))
    return out


@dataclass(frozen=True)
class ReferenceElement:
    k: int
    phi_left: np.ndarray  # phi_j(-1)
    phi_right: np.ndarray  # phi_j(+1)
    stiffness: np.ndarray  # D[j, l] = int phi_l phi_j' dxi


@lru_cache(maxsize=None)
def reference_element(k: int) -> ReferenceElement:
    if k < 0:
        raise ArgumentError(f"polynomial degree must be >= 0, got {k}")
    xq, wq = np.polynomial.legendre.leggauss(k + 1)
    phi = basis_values(k, xq)
    dphi = basis_derivatives(k, xq)
    D = (dphi * wq) @ phi.T
    return ReferenceElement(
        k,
        basis_values(k, -1.0),
        basis_values(k, 1.0),
        D,
    )


@dataclass(frozen=True)
class DgField:
    mesh: Mesh1D
    k: int
    coeffs: np.ndarray  # (Nx, k+1)

    def __call__(self, x) -> np.ndarray:
        return eval_field(self, x)

    def cell_norms_sq(self) -> np.ndarray:
        return 0.5 * self.mesh.h * np.sum(self.coeffs**2, axis=1)

    def integral(self) -> float:
        # int phi_0 dxi = sqrt(2); dx = h/2 dxi
        return float(0.5 * self.mesh.h * np.sqrt(2.0) * np.sum(self.coeffs[:, 0]))


def project_l2(f: Callable[[np.ndarray], np.ndarray], mesh: Mesh1D, k: int, nq: int | None = None) -> DgField:
    """L2 projection of ``f`` onto piecewise polynomials of degree ``k``.

    Uses ``k + 6`` Gauss points per cell unless ``nq`` is given.
    """
    nq = k + 6 if nq is None else nq
    xq, wq = np.polynomial.legendre.leggauss(nq)
    phi = basis_values(k, xq)  # (k+1, nq)
    x = mesh.edges[:-1, None] + 0.5 * mesh.h * (xq[None, :] + 1.0)
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    # (2/h) int f phi_j dx = sum_g w_g f phi_j
    coeffs = (fx * wq) @ phi.T
    return DgField(mesh, k, coeffs)


def eval_field(field: DgField, x) -> np.ndarray:
    i, xi = field.mesh.locate(x)
    phi = basis_values(field.k, xi)
    return np.einsum("...j,j...->...", field.coeffs[i], phi)


def eval_trace(field: DgField, i: int, side: int) -> float:
    """Value of cell ``i``'s polynomial at its right (``side=+1``) or left (``-1``) end."""
    ref = reference_element(field.k)
    phi = ref.phi_right if side > 0 else ref.phi_left
    return float(field.coeffs[i % field.mesh.Nx] @ phi)


@dataclass(frozen=True)
class DgMultiField:
    """N+1 DG fields on one mesh, stored as an array of shape ``(N+1, Nx, k+1)``."""

    mesh: Mesh1D
    k: int
    coeffs: np.ndarray
    representation: str = PHYSICAL

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def fields(self) -> list[DgField]:
        return [DgField(self.mesh, self.k, c) for c in self.coeffs]

    def mode(self, n: int) -> DgField:
        return DgField(self.mesh, self.k, self.coeffs[n])

    def with_coeffs(self, coeffs: np.ndarray) -> "DgMultiField":
        return replace(self, coeffs=coeffs)

    @classmethod
    def from_fields(cls, fields: list[DgField], representation: str = PHYSICAL) -> "DgMultiField":
        mesh, k = fields[0].mesh, fields[0].k
        if any(f.mesh != mesh or f.k != k for f in fields):
            raise ArgumentError("all fields must share mesh and degree")
        return cls(mesh, k, np.stack([f.coeffs for f in fields]), representation)


def deterministic_initial(f: Callable, mesh: Mesh1D, k: int, N: int) -> DgMultiField:
    """Initial state for data independent of ``y``: only the mean mode is populated."""
    coeffs = np.zeros((N + 1, mesh.Nx, k + 1))
    coeffs[0] = project_l2(f, mesh, k).coeffs
    return DgMultiField(mesh, k, coeffs, PHYSICAL)


def random_initial(u0: Callable, mesh: Mesh1D, k: int, basis) -> DgMultiField:
    """Initial state for data ``u0(x, y)``: chaos coefficients by quadrature in ``y``."""
    P = basis.evaluate(basis.nodes)  # (N+1, Q)
    wP = P * basis.weights

    fields = []
    for n in range(basis.N + 1):
        def coeff_fn(x, n=n):
            vals = np.stack([u0(x, yq) * np.ones_like(x) for yq in basis.nodes], axis=-1)
            return vals @ wP[n]
        fields.append(project_l2(coeff_fn, mesh, k))
    return DgMultiField.from_fields(fields, PHYSICAL)


def to_characteristic(v: DgMultiField, S: np.ndarray) -> DgMultiField:
    if v.representation != PHYSICAL:
        raise StateError(f"expected physical representation, got {v.representation}")
    return DgMultiField(v.mesh, v.k, np.einsum("mn,m...->n...", S, v.coeffs), CHARACTERISTIC)


def from_characteristic(q: DgMultiField, S: np.ndarray) -> DgMultiField:
    if q.representation != CHARACTERISTIC:
        raise StateError(f"expected characteristic representation, got {q.representation}")
    return DgMultiField(q.mesh, q.k, np.einsum("mn,n...->m...", S, q.coeffs), PHYSICAL)


def upwind_operator(lam: np.ndarray, mesh: Mesh1D, k: int) -> Callable[[np.ndarray], np.ndarray]:
    """Semidiscrete right-hand side of ``q_t = lam q_x`` acting on coefficient arrays.

    At interface ``x_{i+1/2}`` the flux is ``lam * q(right trace of cell i+1)``
    for ``lam > 0`` and ``lam * q(left cell's trace)`` otherwise.  Modes with
    ``lam == 0`` are left untouched (zero derivative).
    """
    lam = np.asarray(lam, dtype=float)
    ref = reference_element(k)
    active = np.flatnonzero(lam != 0.0)
    lam_a = lam[active][:, None]
    positive = lam_a > 0
    scale = 2.0 / mesh.h

    def rhs(c: np.ndarray) -> np.ndarray:
        out = np.zeros_like(c)
        if active.size == 0:
            return out
        ca = c[active]
        right = ca @ ref.phi_right  # trace at x_{i+1/2} from cell i
        left = ca @ ref.phi_left  # trace at x_{i-1/2} from cell i
        flux = lam_a * np.where(positive, np.roll(left, -1, axis=1), right)
        volume = ca @ ref.stiffness.T
        out[active] = scale * (
            flux[:, :, None] * ref.phi_right
            - np.roll(flux, 1, axis=1)[:, :, None] * ref.phi_left
            - lam_a[:, :, None] * volume
        )
        return out

    return rhs


def rhs_upwind(q: DgMultiField, lam: np.ndarray) -> DgMultiField:
    if q.representation != CHARACTERISTIC:
        raise StateError(f"upwind operator needs characteristic variables, got {q.representation}")
    op = upwind_operator(lam, q.mesh, q.k)
    return q.with_coeffs(op(q.coeffs))
