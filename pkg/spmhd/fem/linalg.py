"""
Sparse assembly and direct solvers.

Matrices are scipy CSR matrices with summed duplicates and sorted column indices.
All solves go through a sparse LU factorization that is checked for tiny pivots
and for its backward residual.
"""
import logging
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy.sparse import bmat, csc_matrix, csr_matrix
from scipy.sparse.linalg import splu

logger = logging.getLogger(__name__)

SparseMatrix = csr_matrix


class Error(Exception):
    """Base class for exceptions in this module."""


class AssemblyError(Error):
    """Raised when a triplet falls outside the matrix."""


class SingularMatrixError(Error):
    """Raised when a matrix is singular to working precision."""


class SolverError(Error):
    """Raised when a solution fails its residual check."""


class TripletList:
    """
    Accumulates (row, col, value) entries for a matrix of fixed shape.

    :param shape: matrix dimensions
    """

    def __init__(self, shape: Tuple[int, int]):
        self.shape = (int(shape[0]), int(shape[1]))
        self._rows = []
        self._cols = []
        self._values = []

    def append(self, row: int, col: int, value: float):
        self.add([row], [col], [value])

    def add(self, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (len(rows) == len(cols) == len(values)):
            raise AssemblyError("Triplet arrays differ in length: {r}, {c}, {v}".format(
                r=len(rows), c=len(cols), v=len(values)))
        self._rows.append(rows)
        self._cols.append(cols)
        self._values.append(values)

    def arrays(self):
        if not self._rows:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        return np.concatenate(self._rows), np.concatenate(self._cols), np.concatenate(self._values)

    def __len__(self):
        return sum(len(r) for r in self._rows)


def assemble(triplets: Union[TripletList, Iterable[Tuple[int, int, float]]],
             shape: Optional[Tuple[int, int]] = None) -> SparseMatrix:
    """
    Builds a CSR matrix from triplets, summing duplicates.

    :param triplets: a :class:`TripletList` or an iterable of ``(row, col, value)``
    :param shape: matrix dimensions, inferred from the largest indices when omitted
    :raises AssemblyError: when an index is negative or outside ``shape``
    """
    if isinstance(triplets, TripletList):
        rows, cols, values = triplets.arrays()
        shape = triplets.shape if shape is None else shape
    else:
        entries = list(triplets)
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        values = np.array([e[2] for e in entries], dtype=np.float64)
        if shape is None:
            shape = (int(rows.max()) + 1 if len(rows) else 0, int(cols.max()) + 1 if len(cols) else 0)

    if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= shape[0] or cols.max() >= shape[1]):
        raise AssemblyError("Triplet index out of range for a {m}x{n} matrix".format(m=shape[0], n=shape[1]))

    matrix = csr_matrix((values, (rows, cols)), shape=shape)
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


class FactorHandle:
    """
    Reusable LU factorization of a square sparse matrix.

    :param matrix: matrix to factorize
    :param name: name of the system, used in error messages
    :param pivot_tol: pivots below ``pivot_tol`` times the largest pivot count as zero
    :param residual_tol: relative backward residual accepted by :meth:`solve`
    """

    def __init__(self, matrix, name: str = 'system', pivot_tol: float = 1e-14,
                 residual_tol: float = 1e-10):
        if matrix.shape[0] != matrix.shape[1]:
            raise SingularMatrixError("{n}: matrix is not square, shape {s}".format(n=name, s=matrix.shape))
        self.name = name
        self.matrix = csr_matrix(matrix)
        self.shape = matrix.shape
        self.residual_tol = residual_tol
        self._norm = float(abs(self.matrix).sum(axis=1).max()) if self.shape[0] else 0.0
        self._lu = None
        if self.shape[0] == 0:
            return

        try:
            self._lu = splu(csc_matrix(self.matrix))
        except RuntimeError as error:
            raise SingularMatrixError("{n}: {e}".format(n=name, e=error))

        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() <= pivot_tol * pivots.max():
            raise SingularMatrixError("{n}: matrix is singular to working precision "
                                      "(smallest pivot {p:.3e})".format(n=name, p=pivots.min()))
        logger.debug("Factorized %s (%d unknowns, %d nonzeros)", name, self.shape[0], self.matrix.nnz)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        if self.shape[0] == 0:
            return np.zeros_like(rhs)
        solution = self._lu.solve(rhs)

        residual = np.max(np.abs(self.matrix @ solution - rhs))
        scale = np.max(np.abs(rhs)) + self._norm * np.max(np.abs(solution))
        if not np.isfinite(residual) or residual > self.residual_tol * max(scale, 1.0):
            raise SolverError("{n}: residual {r:.3e} exceeds tolerance".format(n=self.name, r=residual))
        return solution


def factorize(matrix, name: str = 'system') -> FactorHandle:
    return FactorHandle(matrix, name)


def solve(handle: FactorHandle, rhs: np.ndarray) -> np.ndarray:
    return handle.solve(rhs)


def saddle_matrix(a, b, gauge: Optional[np.ndarray] = None) -> SparseMatrix:
    """
    Builds ``[[A, B^T], [B, 0]]``, bordered by ``[[0, 0, 0], [0, 0, g], [0, g^T, 0]]``
    when a gauge vector ``g`` is given.
    """
    b = csr_matrix(b)
    if gauge is None:
        return csr_matrix(bmat([[a, b.T], [b, None]], format='csr'))
    g = csr_matrix(np.asarray(gauge, dtype=np.float64).reshape(-1, 1))
    return csr_matrix(bmat([[a, b.T, None],
                            [b, None, g],
                            [None, g.T, csr_matrix((1, 1))]], format='csr'))


def solve_saddle(a, b, rhs: np.ndarray, constraint_rhs: Optional[np.ndarray] = None,
                 gauge: Optional[np.ndarray] = None, handle: Optional[FactorHandle] = None,
                 name: str = 'saddle system') -> Tuple[np.ndarray, np.ndarray]:
    """
    Solves ``A x + B^T y = f``, ``B x = h``.

    With a gauge vector ``g`` the multiplier is additionally constrained by
    ``g . y = 0``, which makes rank-one deficient constraint blocks solvable.

    :param a: primal block, n x n
    :param b: constraint block, m x n
    :param rhs: primal right-hand side ``f``
    :param constraint_rhs: constraint right-hand side ``h``, zero by default
    :param gauge: optional gauge vector of length m
    :param handle: factorization of :func:`saddle_matrix` to reuse
    :return: ``(x, y)``
    """
    n = a.shape[0]
    m = b.shape[0]
    h = np.zeros(m) if constraint_rhs is None else np.asarray(constraint_rhs, dtype=np.float64)
    full = [np.asarray(rhs, dtype=np.float64), h]
    if gauge is not None:
        full.append(np.zeros(1))
    if handle is None:
        handle = factorize(saddle_matrix(a, b, gauge), name)
    solution = handle.solve(np.concatenate(full))
    return solution[:n], solution[n:n + m]
