"""
Structured linear solvers for periodic finite element systems.

Two matrix kinds occur: circulant matrices (the k=1 mass and convection
matrices on a uniform periodic mesh), solved by FFT diagonalization, and
periodic banded matrices (any k), solved by a sparse LU of the banded core
plus a Woodbury correction for the wrap-around corner entries.

The coupled RLW operator is the 2x2 block matrix

    M = [[A, B^T],
         [B^T, A]]

with A the mass matrix and B the convection matrix. B is skew-symmetric, so
x^T M x = u^T A u + w^T A w and M is positive definite.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from fem.errors import FactorizationError, SingularMatrixError, StructureError

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-13


class MatrixKind(str, Enum):
    CIRCULANT = "circulant"
    PERIODIC_BANDED = "periodic_banded"


class SolverChoice(str, Enum):
    """Block solver selection; AUTO uses FFT whenever both blocks are circulant."""
    AUTO = "auto"
    FFT = "fft"
    BANDED = "banded"


# ---------------------------------------------------------------------------
# Circulant helpers
# ---------------------------------------------------------------------------

def _first_column(first_row: np.ndarray) -> np.ndarray:
    # C_ij = c[(j - i) mod n], so column 0 is c[(-i) mod n]
    return np.roll(first_row[::-1], 1)


def circulant_eigenvalues(first_row) -> np.ndarray:
    """DFT eigenvalues of the circulant matrix with the given first row."""
    return np.fft.fft(_first_column(np.asarray(first_row, dtype=float)))


def _check_spectrum(values: np.ndarray, scale: float, what: str) -> None:
    if scale == 0.0 or np.min(np.abs(values)) <= SINGULAR_TOLERANCE * scale:
        raise SingularMatrixError(
            f"{what} is singular: smallest eigenvalue {np.min(np.abs(values)):.3e} "
            f"against scale {scale:.3e}"
        )


def _cyclic_distance(rows: np.ndarray, cols: np.ndarray, n: int) -> np.ndarray:
    d = np.abs(rows - cols)
    return np.minimum(d, n - d)


# ---------------------------------------------------------------------------
# StructuredMatrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StructuredMatrix:
    """
    A square operator tagged with its structure.

    Circulant matrices store only their first row. Periodic banded matrices
    store the sparse matrix and the cyclic bandwidth: every nonzero (i, j)
    satisfies min(|i-j|, n-|i-j|) <= bandwidth.
    """
    kind: MatrixKind
    n: int
    first_row: Optional[np.ndarray] = None
    bandwidth: Optional[int] = None
    matrix: Optional[sp.csr_matrix] = None

    @classmethod
    def circulant(cls, first_row) -> "StructuredMatrix":
        row = np.array(first_row, dtype=float)
        if row.ndim != 1 or row.size == 0:
            raise StructureError("Circulant first row must be a non-empty vector")
        row.setflags(write=False)
        return cls(kind=MatrixKind.CIRCULANT, n=row.size, first_row=row)

    @classmethod
    def periodic_banded(cls, matrix, bandwidth: int) -> "StructuredMatrix":
        matrix = sp.csr_matrix(matrix, dtype=float)
        n, m = matrix.shape
        if n != m:
            raise StructureError(f"Periodic banded matrix must be square, got {matrix.shape}")
        coo = matrix.tocoo()
        outside = (_cyclic_distance(coo.row, coo.col, n) > bandwidth) & (coo.data != 0.0)
        if np.any(outside):
            raise StructureError(
                f"{int(np.count_nonzero(outside))} entries lie outside the periodic band {bandwidth}"
            )
        return cls(kind=MatrixKind.PERIODIC_BANDED, n=n, bandwidth=int(bandwidth), matrix=matrix)

    @classmethod
    def from_sparse(cls, matrix, bandwidth: int, prefer_circulant: bool = True) -> "StructuredMatrix":
        """Circulant kind when the matrix is circulant and preferred, banded otherwise."""
        matrix = sp.csr_matrix(matrix, dtype=float)
        if prefer_circulant:
            stored = matrix.getrow(0)
            row = stored.toarray().ravel()
            candidate = cls.circulant(row)
            if matrix.nnz == stored.nnz * matrix.shape[0] and np.allclose(candidate.to_dense(), matrix.toarray(), rtol=0.0,
                           atol=1e-14 * max(1.0, np.abs(row).max())):
                return candidate
        return cls.periodic_banded(matrix, bandwidth)

    @property
    def is_circulant(self) -> bool:
        return self.kind is MatrixKind.CIRCULANT

    def to_dense(self) -> np.ndarray:
        if self.is_circulant:
            return sla.circulant(_first_column(self.first_row))
        return self.matrix.toarray()

    def to_sparse(self) -> sp.csr_matrix:
        if self.is_circulant:
            return sp.csr_matrix(self.to_dense())
        return self.matrix

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_circulant:
            eig = circulant_eigenvalues(self.first_row)
            return np.real(np.fft.ifft(eig * np.fft.fft(x)))
        return self.matrix @ x

    def factorize(self) -> Union["CirculantFactor", "PeriodicBandedFactor"]:
        if self.is_circulant:
            return CirculantFactor.build(self.first_row)
        return periodic_banded_factor(self)


# ---------------------------------------------------------------------------
# Factorizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CirculantFactor:
    """Diagonalized circulant; solves are one FFT pair."""
    eigenvalues: np.ndarray

    @classmethod
    def build(cls, first_row) -> "CirculantFactor":
        eig = circulant_eigenvalues(first_row)
        _check_spectrum(eig, np.max(np.abs(eig)), "Circulant matrix")
        return cls(eigenvalues=eig)

    def solve(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.real(np.fft.ifft(np.fft.fft(z) / self.eigenvalues))


@dataclass(frozen=True, eq=False)
class PeriodicBandedFactor:
    """
    LU of the banded core plus a Woodbury correction for the corner entries.

    With M = Core + U V^T, where U selects the r rows holding corner entries,
    M^{-1} z = y - Z C^{-1} V^T y for y = Core^{-1} z, Z = Core^{-1} U and the
    r x r capacitance matrix C = I + V^T Z.
    """
    n: int
    core: spla.SuperLU
    corner_rows: np.ndarray
    corner_vt: Optional[sp.csr_matrix] = None
    z_block: Optional[np.ndarray] = None
    capacitance: Optional[tuple] = None

    def solve(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        y = self.core.solve(z)
        if self.capacitance is None:
            return y
        t = sla.lu_solve(self.capacitance, self.corner_vt @ y)
        return y - self.z_block @ t


def _splu(matrix: sp.spmatrix) -> spla.SuperLU:
    try:
        return spla.splu(sp.csc_matrix(matrix))
    except RuntimeError as e:
        raise FactorizationError(f"Banded factorization failed: {e}") from e


def periodic_banded_factor(m: StructuredMatrix) -> PeriodicBandedFactor:
    """
    Factorize a periodic banded matrix.

    Systems too small for a proper band (2*bandwidth + 1 >= n) are factored
    whole.
    """
    if m.kind is not MatrixKind.PERIODIC_BANDED:
        raise StructureError(f"Expected a periodic banded matrix, got {m.kind.value}")
    n, bw = m.n, m.bandwidth
    if 2 * bw + 1 >= n:
        logger.debug(f"Factoring whole matrix: n={n}, bandwidth={bw}")
        return PeriodicBandedFactor(n=n, core=_splu(m.matrix), corner_rows=np.empty(0, dtype=int))

    coo = m.matrix.tocoo()
    in_band = np.abs(coo.row - coo.col) <= bw
    core = sp.coo_matrix((coo.data[in_band], (coo.row[in_band], coo.col[in_band])), shape=(n, n))
    corners = sp.coo_matrix((coo.data[~in_band], (coo.row[~in_band], coo.col[~in_band])), shape=(n, n))

    lu = _splu(core)
    rows = np.unique(corners.row)
    if rows.size == 0:
        return PeriodicBandedFactor(n=n, core=lu, corner_rows=rows)

    vt = corners.tocsr()[rows, :]
    u = np.zeros((n, rows.size))
    u[rows, np.arange(rows.size)] = 1.0
    z_block = lu.solve(u)
    cap = np.eye(rows.size) + vt @ z_block
    lu_piv = sla.lu_factor(cap, check_finite=True)
    pivots = np.abs(np.diag(lu_piv[0]))
    if np.min(pivots) <= SINGULAR_TOLERANCE * max(1.0, np.max(pivots)):
        raise FactorizationError("Woodbury capacitance matrix is singular")

    logger.debug(f"Periodic banded factor: n={n}, bandwidth={bw}, corner rows={rows.size}")
    return PeriodicBandedFactor(
        n=n, core=lu, corner_rows=rows, corner_vt=vt, z_block=z_block, capacitance=lu_piv
    )


# ---------------------------------------------------------------------------
# Solves
# ---------------------------------------------------------------------------

def circulant_solve(c, z) -> np.ndarray:
    """Solve C x = z for the circulant C with first row c."""
    return CirculantFactor.build(c).solve(z)


def block_circulant_solve(a, b, z) -> tuple[np.ndarray, np.ndarray]:
    """
    Solve [[A, B], [B, A]] (x, y) = (z1, z2) for circulant A, B in Fourier space.

    Args:
        a: First row of A
        b: First row of B
        z: Stacked right-hand side of length 2n; a length-n vector means z2 = 0

    Returns:
        (x, y)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    n = a.size
    if b.size != n:
        raise StructureError(f"Blocks differ in size: {n} and {b.size}")
    if z.size == n:
        z1, z2 = z, np.zeros(n)
    elif z.size == 2 * n:
        z1, z2 = z[:n], z[n:]
    else:
        raise StructureError(f"Right-hand side has length {z.size}, expected {n} or {2 * n}")

    d_a = circulant_eigenvalues(a)
    d_b = circulant_eigenvalues(b)
    scale = max(np.max(np.abs(d_a)), np.max(np.abs(d_b)))
    _check_spectrum(d_a, scale, "Diagonal block")

    z1_hat = np.fft.fft(z1)
    z2_hat = np.fft.fft(z2)
    schur = d_b * d_b / d_a - d_a
    _check_spectrum(schur, scale, "Block Schur complement")

    y_hat = (d_b / d_a * z1_hat - z2_hat) / schur
    x_hat = (z1_hat - d_b * y_hat) / d_a
    return np.real(np.fft.ifft(x_hat)), np.real(np.fft.ifft(y_hat))


class BlockSystem:
    """
    The coupled operator M = [[A, B^T], [B^T, A]] and its factorization.

    Args:
        mass: Mass matrix A
        convection: Convection matrix B, entries (phi_i, phi_j')
        bandwidth: Cyclic bandwidth of A and B
        solver: "fft" needs circulant blocks; "auto" picks FFT when possible
    """

    def __init__(self, mass, convection, bandwidth: int, solver: SolverChoice = SolverChoice.AUTO):
        self.mass = sp.csr_matrix(mass, dtype=float)
        self.convection = sp.csr_matrix(convection, dtype=float)
        self.coupling = self.convection.T.tocsr()
        self.n = self.mass.shape[0]
        self.bandwidth = bandwidth
        self.solver = SolverChoice(solver)

        if self.solver is SolverChoice.BANDED:
            self.kind = MatrixKind.PERIODIC_BANDED
        else:
            a = StructuredMatrix.from_sparse(self.mass, bandwidth)
            c = StructuredMatrix.from_sparse(self.coupling, bandwidth)
            circulant = a.is_circulant and c.is_circulant
            if self.solver is SolverChoice.FFT and not circulant:
                raise StructureError("FFT block solver needs circulant mass and convection blocks")
            self.kind = MatrixKind.CIRCULANT if circulant else MatrixKind.PERIODIC_BANDED

        if self.kind is MatrixKind.CIRCULANT:
            self._mass_row = self.mass.getrow(0).toarray().ravel()
            self._coupling_row = self.coupling.getrow(0).toarray().ravel()
            # validates both spectra once
            block_circulant_solve(self._mass_row, self._coupling_row, np.zeros(2 * self.n))
            self._factor = None
        else:
            self._perm = np.arange(2 * self.n).reshape(2, self.n).T.ravel()
            interleaved = self.to_sparse()[self._perm][:, self._perm]
            self._factor = periodic_banded_factor(
                StructuredMatrix.periodic_banded(interleaved, 2 * bandwidth + 1)
            )
        logger.debug(f"Block system: n={self.n}, kind={self.kind.value}")

    def to_sparse(self) -> sp.csr_matrix:
        return sp.bmat([[self.mass, self.coupling], [self.coupling, self.mass]], format="csr")

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u, w = x[:self.n], x[self.n:]
        return np.concatenate([self.mass @ u + self.coupling @ w, self.coupling @ u + self.mass @ w])

    def solve(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Solve M (x, y) = (z1, z2); z is stacked, length 2n."""
        z = np.asarray(z, dtype=float)
        if z.size != 2 * self.n:
            raise StructureError(f"Right-hand side has length {z.size}, expected {2 * self.n}")
        if self.kind is MatrixKind.CIRCULANT:
            return block_circulant_solve(self._mass_row, self._coupling_row, z)
        sol = np.empty(2 * self.n)
        sol[self._perm] = self._factor.solve(z[self._perm])
        return sol[:self.n], sol[self.n:]
