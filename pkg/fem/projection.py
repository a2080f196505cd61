"""
L2 projection onto the Lagrange space, the projected derivative, and the
splitting P = pi_1 + pi_2 used to study its accuracy for odd degree.

pi_1 projects onto the node-value subspace spanned by the functions ell_i
(built from psi, ell_i(x_j) = delta_ij), pi_2 onto the bubble subspace of
functions vanishing at every mesh node. For odd k the two subspaces are
orthogonal, so pi_2 is computed cell by cell.

Mesh node x_i = a + i*h, cell i = [x_i, x_{i+1}]. ell_i lives on cells i-1 and
i; the bubbles q_{i,m} live on cell i.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from fem.basis import (
    FeFunction,
    FeSpace,
    PeriodicMesh,
    ScalarFunction,
    bubble_basis,
    l2_norm_error,
    psi,
    sample,
)
from fem.errors import DegreeError, DomainError, StructureError
from fem.structured_linalg import (
    CirculantFactor,
    PeriodicBandedFactor,
    StructuredMatrix,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Gram operator and L2 projection
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GramOperator:
    """Factorized mass matrix A_ij = (phi_j, phi_i) of an FeSpace."""
    space: FeSpace
    matrix: StructuredMatrix
    factorization: Union[CirculantFactor, PeriodicBandedFactor]

    @classmethod
    def build(cls, space: FeSpace) -> "GramOperator":
        mass = space.mass_matrix
        asym = abs(mass - mass.T).max()
        if asym > 1e-14 * abs(mass).max():
            raise StructureError(f"Mass matrix is not symmetric: max asymmetry {asym:.3e}")
        matrix = StructuredMatrix.from_sparse(mass, space.degree)
        logger.debug(f"Gram operator: k={space.degree}, N={space.mesh.n_cells}, kind={matrix.kind.value}")
        return cls(space=space, matrix=matrix, factorization=matrix.factorize())

    def solve(self, rhs) -> np.ndarray:
        return self.factorization.solve(np.asarray(rhs, dtype=float))

    def project_vector(self, rhs) -> FeFunction:
        """FeFunction whose inner products with the basis are rhs."""
        return FeFunction(self.space, self.solve(rhs))

    def norm(self, coeffs) -> float:
        """L2 norm of a coefficient vector, sqrt(c^T A c)."""
        coeffs = np.asarray(coeffs, dtype=float)
        return math.sqrt(max(float(coeffs @ (self.space.mass_matrix @ coeffs)), 0.0))


def _analytic_load(space: FeSpace, f: ScalarFunction) -> np.ndarray:
    rule = space.error_quad
    return space.load_vector(sample(f, space.quad_points(rule)), rule)


def l2_project(gram: GramOperator, f: ScalarFunction) -> FeFunction:
    """Pf, with (f, phi_i) integrated by the oversampled rule."""
    return gram.project_vector(_analytic_load(gram.space, f))


def project_fe_derivative(gram: GramOperator, g: FeFunction) -> FeFunction:
    """P[g_x]; the right-hand side (g_x, phi_i) = (B g)_i is exact."""
    if g.space is not gram.space:
        raise DomainError("Function and Gram operator belong to different spaces")
    return gram.project_vector(gram.space.convection_matrix @ g.coeffs)


def dichotomy_norm(gram: GramOperator, u: ScalarFunction) -> float:
    """
    ||P[(Pu - u)_x]||.

    The Pu part is assembled exactly; the u part is integrated by parts,
    (u_x, phi_i) = -(u, phi_i'), with the oversampled rule.
    """
    space = gram.space
    pu = l2_project(gram, u)
    rule = space.error_quad
    rhs = space.convection_matrix @ pu.coeffs
    rhs = rhs + space.derivative_load_vector(sample(u, space.quad_points(rule)), rule)
    return gram.norm(gram.solve(rhs))


def standard_projection_error(
    gram: GramOperator,
    u: ScalarFunction,
    u_deriv: Optional[ScalarFunction] = None,
) -> tuple[float, Optional[float]]:
    """(||u - Pu||, ||(u - Pu)_x||)."""
    return l2_norm_error(gram.space, l2_project(gram, u), u, u_deriv)


# ---------------------------------------------------------------------------
# Node-value / bubble splitting (odd k)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SplitBasis:
    """
    Coefficients, in the nodal basis, of the functions ell_i (rows of ell,
    shape (N, n_dof)) and q_{i,m} (rows of bubbles, shape ((k-1)N, n_dof),
    row i*(k-1) + m-1).
    """
    space: FeSpace
    ell: sp.csr_matrix
    bubbles: sp.csr_matrix

    @property
    def ell_gram(self) -> np.ndarray:
        """(ell_i, ell_j), dense N x N."""
        return (self.ell @ self.space.mass_matrix @ self.ell.T).toarray()

    @property
    def bubble_gram(self) -> np.ndarray:
        """Cell-local bubble Gram matrix h(phi_nu, phi_m), (k-1) x (k-1)."""
        k = self.space.degree
        block = self.bubbles[: k - 1, :]
        return (block @ self.space.mass_matrix @ block.T).toarray()


def build_split_basis(space: FeSpace) -> SplitBasis:
    """Construct ell_i from psi and q_{i,m} from the bubbles, then verify the splitting."""
    k, n_cells = space.degree, space.mesh.n_cells
    if k % 2 == 0:
        raise DegreeError(f"Node-value splitting needs odd degree, got k={k}")
    if n_cells < 2:
        raise DomainError("Node-value splitting needs at least two cells")

    local = np.arange(k + 1) / k
    rising = psi(k, local)
    falling = psi(k, 1.0 - local)

    ell = sp.lil_matrix((n_cells, space.n_dof))
    for i in range(n_cells):
        ell[i, space.cell_dofs[(i - 1) % n_cells]] = rising
        ell[i, space.cell_dofs[i]] = falling
    ell = ell.tocsr()

    bubbles = sp.lil_matrix(((k - 1) * n_cells, space.n_dof))
    if k > 1:
        shapes = np.array([bubble_basis(k, m, local) for m in range(1, k)])
        for i in range(n_cells):
            for m in range(k - 1):
                bubbles[i * (k - 1) + m, space.cell_dofs[i]] = shapes[m]
    bubbles = bubbles.tocsr()

    split = SplitBasis(space=space, ell=ell, bubbles=bubbles)
    _verify_split(split)
    return split


def _verify_split(split: SplitBasis) -> None:
    space = split.space
    vertex_dofs = space.degree * np.arange(space.mesh.n_cells)

    at_nodes = split.ell[:, vertex_dofs].toarray()
    if not np.allclose(at_nodes, np.eye(space.mesh.n_cells), rtol=0.0, atol=1e-13):
        raise StructureError("ell_i(x_j) differs from delta_ij")

    if split.bubbles.shape[0]:
        if np.max(np.abs(split.bubbles[:, vertex_dofs].toarray())) > 1e-13:
            raise StructureError("Bubble function does not vanish at a mesh node")
        cross = split.ell @ space.mass_matrix @ split.bubbles.T
        worst = abs(cross).max()
        if worst > 1e-12 * space.h:
            raise StructureError(f"Node-value and bubble subspaces not orthogonal: {worst:.3e}")


def gram_eigenvalues_s1(k: int, mesh: PeriodicMesh) -> np.ndarray:
    """lambda_m = 2h/(k(k+1)(k+2)) (k+1+cos(2 pi m/N)), m = 1..N."""
    if int(k) != k or k < 1 or k % 2 == 0:
        raise DegreeError(f"Eigenvalue formula needs odd degree, got k={k}")
    m = np.arange(1, mesh.n_cells + 1)
    scale = 2.0 * mesh.h / (k * (k + 1) * (k + 2))
    return scale * (k + 1 + np.cos(2.0 * np.pi * m / mesh.n_cells))


def _pi1_weights(split: SplitBasis, load: np.ndarray) -> np.ndarray:
    gram = StructuredMatrix.from_sparse(sp.csr_matrix(split.ell_gram), 1)
    return gram.factorize().solve(split.ell @ load)


def split_projection(split: SplitBasis, f: ScalarFunction) -> tuple[FeFunction, FeFunction]:
    """
    (pi_1 f, pi_2 f). pi_1 solves the ell-basis Gram system; pi_2 solves the
    bubble Gram system on every cell.
    """
    space = split.space
    load = _analytic_load(space, f)
    pi1 = FeFunction(space, split.ell.T @ _pi1_weights(split, load))

    k, n_cells = space.degree, space.mesh.n_cells
    if k == 1:
        return pi1, space.zero()
    local_rhs = (split.bubbles @ load).reshape(n_cells, k - 1)
    beta = np.linalg.solve(split.bubble_gram, local_rhs.T).T
    pi2 = FeFunction(space, split.bubbles.T @ beta.ravel())
    return pi1, pi2


def superapproximation_residual(split: SplitBasis, u: ScalarFunction) -> tuple[float, float]:
    """
    (max_i |(pi_1 u - u)(x_i)|, max_i |(pi_1 u - u, ell_i)_{I_i}|), with I_i
    the cell to the left of x_i, on which ell_i rises from 0 to 1.
    """
    space = split.space
    k = space.degree
    pi1, _ = split_projection(split, u)

    vertex_dofs = k * np.arange(space.mesh.n_cells)
    nodal = np.max(np.abs(pi1.coeffs[vertex_dofs] - sample(u, space.mesh.nodes)))

    rule = space.error_quad
    values, _ = pi1.cell_values(rule)
    error = values - sample(u, space.quad_points(rule))
    rising = psi(k, rule.points)
    # entry c is the residual of ell_{c+1}
    per_cell = space.h * (error * rule.weights) @ rising
    return float(nodal), float(np.max(np.abs(per_cell)))
