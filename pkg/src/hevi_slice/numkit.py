"""Linear algebra kernels: dense and banded LU with singularity detection, sparse LU factorisations for the mass and
column systems, Jacobi-preconditioned conjugate gradients and the polished 4x4 eigenvalue solve used by the
stability analyser.
"""
# stdlib
from dataclasses import dataclass

import numpy
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from hevi_slice import loggingtools
from hevi_slice.exceptions import ConvergenceError
from hevi_slice.exceptions import LinearSolverError
from hevi_slice.exceptions import NumericError
from hevi_slice.exceptions import SingularMatrixError

LOG = loggingtools.getLogger()

#: Pivots below this fraction of the largest matrix entry are treated as zero
PIVOT_THRESHOLD = 1e-14

#: Relative residual bound checked after every direct solve; exceeding it is logged
LU_RESIDUAL_BOUND = 1e-12

#: Relative residual above which a direct solve is rejected
LU_RESIDUAL_HARD_BOUND = 1e-6

EIG_POLISH_MAX_ITER = 8

SparseMatrix = scipy.sparse.csr_matrix  # pylint: disable=invalid-name


@dataclass(frozen=True)
class DenseMatrix(object):
    """Square dense matrix stored row-major"""
    values: numpy.ndarray

    def __post_init__(self):
        values = numpy.asarray(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise LinearSolverError(reason="dense matrix must be square, got shape %s" % (values.shape,))
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def matvec(self, x):
        return self.values.dot(x)


@dataclass(frozen=True)
class BandedMatrix(object):
    """Square matrix in LAPACK diagonal-ordered storage: ``bands[upper + i - j, j] == A[i, j]``"""
    lower: int
    upper: int
    bands: numpy.ndarray

    def __post_init__(self):
        if self.bands.shape[0] != self.lower + self.upper + 1:
            raise LinearSolverError(reason="band storage has %d rows for bandwidth (%d, %d)"
                                           % (self.bands.shape[0], self.lower, self.upper))

    @property
    def size(self):
        return self.bands.shape[1]

    @property
    def shape(self):
        return self.size, self.size

    @classmethod
    def from_dense(cls, matrix, lower=None, upper=None):
        """Builds the banded form of a dense or sparse square matrix, measuring the bandwidth when not given.

        :raises: LinearSolverError if an entry lies outside the requested band
        """
        coo = scipy.sparse.coo_matrix(matrix)
        offsets = coo.row - coo.col
        nonzero = coo.data != 0
        measured_lower = int(max(offsets[nonzero].max(initial=0), 0))
        measured_upper = int(max((-offsets[nonzero]).max(initial=0), 0))
        lower = measured_lower if lower is None else lower
        upper = measured_upper if upper is None else upper
        if measured_lower > lower or measured_upper > upper:
            raise LinearSolverError(reason="matrix bandwidth (%d, %d) exceeds (%d, %d)"
                                           % (measured_lower, measured_upper, lower, upper))
        bands = numpy.zeros((lower + upper + 1, coo.shape[1]), dtype=numpy.result_type(coo.data, float))
        # duplicates in coo are summed
        numpy.add.at(bands, (upper + coo.row - coo.col, coo.col), coo.data)
        return cls(lower=lower, upper=upper, bands=bands)

    def to_dense(self):
        size = self.size
        dense = numpy.zeros((size, size), dtype=self.bands.dtype)
        for row in range(self.lower + self.upper + 1):
            offset = self.upper - row
            if offset >= 0:
                idx = numpy.arange(size - offset)
                dense[idx, idx + offset] = self.bands[row, idx + offset]
            else:
                idx = numpy.arange(size + offset)
                dense[idx - offset, idx] = self.bands[row, idx]
        return dense

    def matvec(self, x):
        return self.to_dense().dot(x)


def sparse_from_triplets(rows, cols, values, shape):
    """Finalised compressed-row matrix from coordinate triplets; duplicates are summed and explicit zeros dropped.

    :rtype: scipy.sparse.csr_matrix
    """
    matrix = scipy.sparse.coo_matrix((values, (rows, cols)), shape=shape).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return matrix


def _check_residual(matvec, x, b, norm_a):
    """Backward error check of a direct solve

    :raises: LinearSolverError
    """
    residual = numpy.linalg.norm(matvec(x) - b, numpy.inf)
    scale = norm_a * numpy.linalg.norm(x, numpy.inf) + numpy.linalg.norm(b, numpy.inf)
    if not numpy.isfinite(residual) or residual > LU_RESIDUAL_HARD_BOUND * scale:
        raise LinearSolverError(reason="residual %.3e exceeds %.3e" % (residual, LU_RESIDUAL_HARD_BOUND * scale))
    if residual > LU_RESIDUAL_BOUND * scale:
        LOG.warning("Direct solve residual %.3e exceeds bound %.3e", residual, LU_RESIDUAL_BOUND * scale)
    return residual


class Factorization(object):
    """A reusable LU factorisation.  Use :func:`lu_factor` to build one."""

    def __init__(self, solve_func, shape, description):
        self._solve = solve_func
        self.shape = shape
        self.description = description

    def solve(self, b):
        """Solves ``A x = b`` for a vector or a block of column vectors"""
        b = numpy.asarray(b)
        if b.shape[0] != self.shape[0]:
            raise LinearSolverError(reason="right side has %d rows, matrix has %d" % (b.shape[0], self.shape[0]))
        try:
            return self._solve(b)
        except (ValueError, RuntimeError, numpy.linalg.LinAlgError) as exc:
            raise LinearSolverError(reason="%s solve failed: %s" % (self.description, exc))

    def __repr__(self):
        return "Factorization(%s, shape=%s)" % (self.description, self.shape)


def _dense_pivot_check(lu_matrix, scale):
    pivots = numpy.abs(numpy.diag(lu_matrix))
    smallest = pivots.min() if pivots.size else 0.0
    if scale == 0.0 or smallest <= PIVOT_THRESHOLD * scale:
        raise SingularMatrixError(pivot=smallest)


def lu_factor(matrix):
    """Factorises a dense (ndarray or :class:`DenseMatrix`) or sparse square matrix.

    Sparse matrices use SuperLU; the block-diagonal column systems of the vertical solve keep their blocks separate
    under the fill-reducing ordering so this is equivalent to independent column factorisations.

    :raises: SingularMatrixError
    :rtype: Factorization
    """
    if isinstance(matrix, BandedMatrix):
        matrix = matrix.to_dense()
    if isinstance(matrix, DenseMatrix):
        matrix = matrix.values

    if scipy.sparse.issparse(matrix):
        csc = scipy.sparse.csc_matrix(matrix)
        if csc.shape[0] != csc.shape[1]:
            raise LinearSolverError(reason="matrix must be square, got shape %s" % (csc.shape,))
        try:
            factor = scipy.sparse.linalg.splu(csc)
        except RuntimeError as exc:
            raise SingularMatrixError("Sparse factorisation failed: {reason}", reason=str(exc))
        scale = abs(csc).max() if csc.nnz else 0.0
        pivots = numpy.abs(factor.U.diagonal())
        smallest = pivots.min() if pivots.size else 0.0
        if scale == 0.0 or smallest <= PIVOT_THRESHOLD * scale:
            raise SingularMatrixError(pivot=smallest)
        return Factorization(factor.solve, csc.shape, "sparse LU")

    dense = numpy.asarray(matrix)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise LinearSolverError(reason="matrix must be square, got shape %s" % (dense.shape,))
    lu_piv = scipy.linalg.lu_factor(dense, check_finite=True)
    _dense_pivot_check(lu_piv[0], numpy.abs(dense).max() if dense.size else 0.0)
    return Factorization(lambda b: scipy.linalg.lu_solve(lu_piv, b), dense.shape, "dense LU")


def lu_solve(matrix, b):
    """Direct solve of ``A x = b`` by LU with partial pivoting.

    :param matrix: Square system matrix
    :type matrix: numpy.ndarray|DenseMatrix|BandedMatrix|scipy.sparse.spmatrix
    :param b: Right side
    :type b: numpy.ndarray
    :return: The solution vector
    :rtype: numpy.ndarray
    :raises: SingularMatrixError, LinearSolverError
    """
    b = numpy.asarray(b)
    if isinstance(matrix, BandedMatrix):
        scale = numpy.abs(matrix.bands).max() if matrix.bands.size else 0.0
        if scale == 0.0:
            raise SingularMatrixError(pivot=0.0)
        try:
            x = scipy.linalg.solve_banded((matrix.lower, matrix.upper), matrix.bands, b)
        except numpy.linalg.LinAlgError as exc:
            raise SingularMatrixError("Banded factorisation failed: {reason}", reason=str(exc))
        if not numpy.all(numpy.isfinite(x)):
            raise SingularMatrixError(pivot=0.0)
        _check_residual(matrix.matvec, x, b, numpy.abs(matrix.bands).sum(axis=0).max())
        return x

    factor = lu_factor(matrix)
    x = factor.solve(b)
    operator = matrix.values if isinstance(matrix, DenseMatrix) else matrix
    norm_a = abs(operator).sum(axis=1).max() if scipy.sparse.issparse(operator) \
        else numpy.abs(operator).sum(axis=1).max()
    _check_residual(operator.dot, x, b, norm_a)
    return x


def cg_solve(matrix, b, tol=1e-12, max_iter=None, preconditioned=True, return_info=False):
    """Conjugate gradients for a symmetric positive definite system, Jacobi preconditioned by default.

    :param matrix: SPD system matrix
    :type matrix: scipy.sparse.spmatrix|numpy.ndarray
    :param b: Right side
    :param tol: Relative residual target ``|b - A x| <= tol |b|``
    :param max_iter: Iteration budget; defaults to 10 times the system size
    :param preconditioned: Use the inverse diagonal as preconditioner
    :param return_info: Also return a dict with ``iterations`` and ``residual``
    :return: solution, or (solution, info)
    :raises: ConvergenceError
    """
    operator = scipy.sparse.csr_matrix(matrix)
    b = numpy.asarray(b, dtype=float)
    size = operator.shape[0]
    max_iter = 10 * size if max_iter is None else max_iter
    b_norm = numpy.linalg.norm(b)
    if b_norm == 0.0:
        x = numpy.zeros(size)
        return (x, {"iterations": 0, "residual": 0.0}) if return_info else x

    preconditioner = None
    if preconditioned:
        diagonal = operator.diagonal()
        if numpy.any(diagonal <= 0.0):
            raise LinearSolverError(reason="Jacobi preconditioner needs a positive diagonal")
        preconditioner = scipy.sparse.diags(1.0 / diagonal)

    history = []

    def _record(xk):
        history.append(numpy.linalg.norm(b - operator.dot(xk)) / b_norm)

    x, info = scipy.sparse.linalg.cg(operator, b, rtol=tol, atol=0.0, maxiter=max_iter, M=preconditioner,
                                     callback=_record)
    residual = numpy.linalg.norm(b - operator.dot(x)) / b_norm
    if info != 0 or residual > tol * (1.0 + 1e-8):
        raise ConvergenceError(iterations=len(history), residual_history=history[-5:] or [residual])
    LOG.debug("cg converged in %d iterations, relative residual %.3e", len(history), residual)
    if return_info:
        return x, {"iterations": len(history), "residual": residual}
    return x


def det_residual(matrix, eigenvalue):
    """``|det(A - lambda I)|`` for the eigenvalue self-check"""
    matrix = numpy.asarray(matrix, dtype=complex)
    return abs(numpy.linalg.det(matrix - eigenvalue * numpy.eye(matrix.shape[0])))


def _polish(matrix, eigenvalue):
    """Newton refinement on det(A - lambda I); keeps a step only when it lowers the determinant residual"""
    identity = numpy.eye(matrix.shape[0])
    current = det_residual(matrix, eigenvalue)
    for _ in range(EIG_POLISH_MAX_ITER):
        if current == 0.0:
            break
        shifted = matrix - eigenvalue * identity
        if numpy.linalg.cond(shifted) > 1e14:
            break
        # d/dlambda log det(A - lambda I) = -trace((A - lambda I)^-1)
        trace_inv = numpy.trace(numpy.linalg.inv(shifted))
        if trace_inv == 0.0:
            break
        candidate = eigenvalue + 1.0 / trace_inv
        candidate_residual = det_residual(matrix, candidate)
        if not candidate_residual < current:
            break
        eigenvalue, current = candidate, candidate_residual
    return eigenvalue


def eig4(matrix):
    """Eigenvalues of a 4x4 complex matrix, polished and sorted by argument then modulus.

    :param matrix: 4x4 matrix with finite entries
    :rtype: numpy.ndarray of complex
    :raises: NumericError
    """
    matrix = numpy.asarray(matrix, dtype=complex)
    if matrix.shape != (4, 4):
        raise NumericError(reason="eig4 expects a 4x4 matrix, got %s" % (matrix.shape,))
    if not numpy.all(numpy.isfinite(matrix)):
        raise NumericError(reason="eig4 received non-finite entries")
    try:
        eigenvalues = numpy.linalg.eigvals(matrix)
    except numpy.linalg.LinAlgError as exc:
        raise NumericError(reason="eigenvalue iteration did not converge: %s" % exc)

    polished = numpy.array([_polish(matrix, value) for value in eigenvalues])
    if not numpy.all(numpy.isfinite(polished)):
        raise NumericError(reason="eigenvalue polishing produced non-finite values")
    return sort_eigenvalues(polished)


def sort_eigenvalues(eigenvalues):
    """Deterministic ordering by argument then modulus, insensitive to round-off in the last bits"""
    eigenvalues = numpy.asarray(eigenvalues, dtype=complex)
    args = numpy.round(numpy.angle(eigenvalues), 12)
    # -pi and pi are the same direction
    args[args <= -numpy.round(numpy.pi, 12)] = numpy.round(numpy.pi, 12)
    moduli = numpy.round(numpy.abs(eigenvalues), 12)
    order = numpy.lexsort((moduli, args))
    return eigenvalues[order]
