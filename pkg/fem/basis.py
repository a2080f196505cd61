"""
Periodic meshes, Lagrange finite element spaces and the special polynomials
used to analyse them.

Computation happens in the standard nodal Lagrange basis on uniform local
nodes x_{i-1} + j*h/k. The psi polynomial and the Bernstein bubbles are only
used to build the node-value / bubble splitting of the space, which exists for
verification of the projection estimates.

All sampled functions must accept numpy arrays (numpy ufuncs do); a callable
returning a scalar is broadcast, which covers constants.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from fem.errors import DegreeError, DomainError

logger = logging.getLogger(__name__)

MAX_DEGREE = 7

ScalarFunction = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Mesh and quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicMesh:
    """Uniform partition of [a, b] into n_cells cells, periodically extended."""
    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError(f"Mesh needs a < b, got a={self.a}, b={self.b}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise DomainError(f"Mesh needs a positive number of cells, got {self.n_cells}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def nodes(self) -> np.ndarray:
        """Mesh nodes x_0 .. x_{N-1}; x_N is identified with x_0."""
        return self.a + self.h * np.arange(self.n_cells)

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Map physical points to (cell index, reference coordinate in [0, 1])."""
        s = np.mod((np.asarray(x, dtype=float) - self.a) / self.h, self.n_cells)
        cell = np.minimum(np.floor(s).astype(int), self.n_cells - 1)
        return cell, s - cell


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre rule on the reference cell [0, 1]."""
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.points)


@lru_cache(maxsize=None)
def gauss_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre nodes and weights mapped to [0, 1], exact to degree 2n-1."""
    if int(n_points) != n_points or n_points < 1:
        raise DomainError(f"Quadrature needs at least one point, got {n_points}")
    x, w = leggauss(int(n_points))
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights)


# ---------------------------------------------------------------------------
# Reference Lagrange basis
# ---------------------------------------------------------------------------

def _check_degree(k: int, minimum: int = 1) -> None:
    if int(k) != k or k < minimum:
        raise DegreeError(f"Degree must be an integer >= {minimum}, got {k}")


def eval_basis(k: int, t) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the k+1 Lagrange cardinal polynomials on the uniform nodes j/k.

    Args:
        k: Polynomial degree (>= 1)
        t: Reference coordinate(s) in [0, 1], scalar or array

    Returns:
        (values, derivs), each of shape t.shape + (k+1,). Derivatives are with
        respect to t; divide by h for the physical derivative.
    """
    _check_degree(k)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("Reference coordinate must lie in [0, 1]")

    nodes = np.linspace(0.0, 1.0, k + 1)
    diff = t[..., None] - nodes
    values = np.empty(t.shape + (k + 1,))
    derivs = np.zeros(t.shape + (k + 1,))
    for j in range(k + 1):
        others = [m for m in range(k + 1) if m != j]
        denom = np.prod(nodes[j] - nodes[others])
        values[..., j] = np.prod(diff[..., others], axis=-1) / denom
        for l in others:
            rest = [m for m in others if m != l]
            derivs[..., j] += np.prod(diff[..., rest], axis=-1) / denom
    return values, derivs


@lru_cache(maxsize=None)
def _tabulate(k: int, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    values, derivs = eval_basis(k, gauss_rule(n_points).points)
    values.setflags(write=False)
    derivs.setflags(write=False)
    return values, derivs


# ---------------------------------------------------------------------------
# psi and the bubble functions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _psi_coefficients(k: int) -> tuple[float, ...]:
    # Leibniz-rule expansion, sum over j of
    # C(k-1, j) (k+1)! (-1)^j / ((k+1-j)! (j+1)!) x^(k-j) (1-x)^j
    coeffs = [Fraction(0)] * (k + 1)
    for j in range(k):
        scale = Fraction(
            math.comb(k - 1, j) * math.factorial(k + 1) * (-1) ** j,
            math.factorial(k + 1 - j) * math.factorial(j + 1),
        )
        for m in range(j + 1):
            coeffs[k - j + m] += scale * math.comb(j, m) * (-1) ** m
    return tuple(float(c) for c in coeffs)


def psi_polynomial(k: int) -> Polynomial:
    """
    The degree-k polynomial psi in monomial form, for any k >= 1.

    For odd k it is orthogonal on [0, 1] to every degree-k polynomial vanishing
    at both endpoints, with psi(0) = 0 and psi(1) = 1.
    """
    _check_degree(k)
    return Polynomial(_psi_coefficients(int(k)))


def _check_odd(k: int) -> None:
    _check_degree(k)
    if k % 2 == 0:
        raise DegreeError(f"psi is only defined here for odd degree, got k={k}")


def _check_unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("Argument must lie in [0, 1]")
    return x


def _as_result(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def psi(k: int, x):
    """Evaluate psi for odd k at x in [0, 1]."""
    _check_odd(k)
    return _as_result(psi_polynomial(k)(_check_unit(x)))


def psi_prime(k: int, x):
    """Derivative of psi for odd k at x in [0, 1]."""
    _check_odd(k)
    return _as_result(psi_polynomial(k).deriv()(_check_unit(x)))


def bubble_basis(k: int, j: int, x):
    """
    phi_j(x) = x(1-x) b_{k-2, j-1}(x), with b the Bernstein polynomials of
    degree k-2. Vanishes at 0 and 1.
    """
    _check_degree(k, minimum=2)
    if not 1 <= j <= k - 1:
        raise DomainError(f"Bubble index must be in 1..{k - 1}, got {j}")
    x = _check_unit(x)
    bernstein = math.comb(k - 2, j - 1) * x ** (j - 1) * (1.0 - x) ** (k - 1 - j)
    return _as_result(x * (1.0 - x) * bernstein)


# ---------------------------------------------------------------------------
# Finite element space
# ---------------------------------------------------------------------------

def sample(f: ScalarFunction, x: np.ndarray) -> np.ndarray:
    """Evaluate f on an array of points, broadcasting scalar results."""
    values = np.asarray(f(x), dtype=float)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape).copy()
    return values


@dataclass(frozen=True, eq=False)
class FeSpace:
    """
    Continuous periodic piecewise polynomials of degree k on a PeriodicMesh.

    Degree of freedom k*i + j (mod k*N) sits at x_i + j*h/k. Three quadrature
    rules are attached: assembly (k+2 points), nonlinear terms and functionals
    (2k+2 points, exact for degree 3k), and error norms against analytic
    functions (2k+4 points).
    """
    mesh: PeriodicMesh
    degree: int

    def __post_init__(self):
        _check_degree(self.degree)
        if self.degree > MAX_DEGREE:
            raise DegreeError(f"Degrees above {MAX_DEGREE} are not supported, got {self.degree}")

    @property
    def n_dof(self) -> int:
        return self.degree * self.mesh.n_cells

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def quad(self) -> QuadratureRule:
        return gauss_rule(self.degree + 2)

    @property
    def nonlinear_quad(self) -> QuadratureRule:
        return gauss_rule(2 * self.degree + 2)

    @property
    def error_quad(self) -> QuadratureRule:
        return gauss_rule(2 * self.degree + 4)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.mesh.a + np.arange(self.n_dof) * (self.h / self.degree)

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        k, n_cells = self.degree, self.mesh.n_cells
        local = k * np.arange(n_cells)[:, None] + np.arange(k + 1)[None, :]
        return local % self.n_dof

    def tabulate(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Reference basis values and t-derivatives at the rule points, shape (q, k+1)."""
        return _tabulate(self.degree, rule.n_points)

    def quad_points(self, rule: QuadratureRule) -> np.ndarray:
        """Physical quadrature points, shape (N, q)."""
        left = self.mesh.nodes[:, None]
        return left + self.h * rule.points[None, :]

    def integrate(self, cell_values: np.ndarray, rule: QuadratureRule) -> float:
        """Integral over [a, b] of values given at quad_points(rule)."""
        return float(self.h * np.sum(cell_values @ rule.weights))

    def load_vector(self, cell_values: np.ndarray, rule: QuadratureRule) -> np.ndarray:
        """Vector (f, phi_i) for f given at quad_points(rule)."""
        values, _ = self.tabulate(rule)
        local = self.h * (cell_values * rule.weights) @ values
        return self._gather(local)

    def derivative_load_vector(self, cell_values: np.ndarray, rule: QuadratureRule) -> np.ndarray:
        """Vector (f, phi_i') for f given at quad_points(rule)."""
        _, derivs = self.tabulate(rule)
        local = (cell_values * rule.weights) @ derivs
        return self._gather(local)

    def _gather(self, local: np.ndarray) -> np.ndarray:
        return np.bincount(self.cell_dofs.ravel(), weights=local.ravel(), minlength=self.n_dof)

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        n_cells, size = self.mesh.n_cells, self.degree + 1
        rows = np.broadcast_to(self.cell_dofs[:, :, None], (n_cells, size, size))
        cols = np.broadcast_to(self.cell_dofs[:, None, :], (n_cells, size, size))
        data = np.broadcast_to(local, (n_cells, size, size))
        matrix = sp.coo_matrix(
            (data.ravel(), (rows.ravel(), cols.ravel())), shape=(self.n_dof, self.n_dof)
        )
        return matrix.tocsr()

    @cached_property
    def mass_matrix(self) -> sp.csr_matrix:
        """A_ij = (phi_i, phi_j)."""
        values, _ = self.tabulate(self.quad)
        local = self.h * (values.T * self.quad.weights) @ values
        logger.debug(f"Assembled mass matrix: k={self.degree}, n_dof={self.n_dof}")
        return self._assemble(local)

    @cached_property
    def convection_matrix(self) -> sp.csr_matrix:
        """B_ij = (phi_i, phi_j'); skew-symmetric under periodicity."""
        values, derivs = self.tabulate(self.quad)
        local = (values.T * self.quad.weights) @ derivs
        return self._assemble(local)

    @cached_property
    def stiffness_matrix(self) -> sp.csr_matrix:
        """K_ij = (phi_i', phi_j')."""
        _, derivs = self.tabulate(self.quad)
        local = (derivs.T * self.quad.weights) @ derivs / self.h
        return self._assemble(local)

    def coefficients_at(self, coeffs: np.ndarray, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Values and physical derivatives of a coefficient vector at quad_points(rule)."""
        values, derivs = self.tabulate(rule)
        local = coeffs[self.cell_dofs]
        return local @ values.T, local @ derivs.T / self.h

    def zero(self) -> "FeFunction":
        return FeFunction(self, np.zeros(self.n_dof))


# ---------------------------------------------------------------------------
# Finite element functions
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FeFunction:
    """Coefficient vector of length n_dof in the nodal basis of an FeSpace."""
    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dof,):
            raise DomainError(
                f"Coefficient vector has shape {self.coeffs.shape}, expected ({self.space.n_dof},)"
            )

    def _local(self, x):
        cell, t = self.space.mesh.locate(x)
        values, derivs = eval_basis(self.space.degree, t)
        local = self.coeffs[self.space.cell_dofs[cell]]
        return local, values, derivs

    def evaluate(self, x):
        local, values, _ = self._local(x)
        return _as_result(np.sum(local * values, axis=-1))

    def derivative(self, x):
        """Cellwise derivative; at a mesh node the right-hand cell is used."""
        local, _, derivs = self._local(x)
        return _as_result(np.sum(local * derivs, axis=-1) / self.space.h)

    def cell_values(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        return self.space.coefficients_at(self.coeffs, rule)

    def copy(self) -> "FeFunction":
        return FeFunction(self.space, self.coeffs.copy())


def interpolate(space: FeSpace, f: ScalarFunction) -> FeFunction:
    """Nodal interpolant I_h f: f sampled at the global nodes."""
    return FeFunction(space, sample(f, space.nodes))


def l2_norm(g: FeFunction) -> float:
    rule = g.space.nonlinear_quad
    values, _ = g.cell_values(rule)
    return math.sqrt(g.space.integrate(values ** 2, rule))


def l2_norm_error(
    space: FeSpace,
    g: FeFunction,
    f: ScalarFunction,
    f_deriv: Optional[ScalarFunction] = None,
) -> tuple[float, Optional[float]]:
    """
    L2 error and optional H1-seminorm error between g and an analytic f.

    Uses the oversampled error rule (2k+4 points) cellwise.
    """
    rule = space.error_quad
    x = space.quad_points(rule)
    values, derivs = g.cell_values(rule)
    l2 = math.sqrt(space.integrate((values - sample(f, x)) ** 2, rule))
    if f_deriv is None:
        return l2, None
    h1 = math.sqrt(space.integrate((derivs - sample(f_deriv, x)) ** 2, rule))
    return l2, h1
