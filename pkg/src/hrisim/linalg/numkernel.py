"""
Complex-matrix primitives shared by the rest of the package: column-stacking
vectorization, Kronecker and block-diagonal construction, minimum-norm least
squares and numerical rank.

All functions are pure and operate on dense ``np.ndarray`` objects.
"""
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

#: Relative singular-value threshold used to decide "full column rank"
RANK_REL_TOL = 1e-10


def _as_matrix(arr: np.ndarray, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}.")
    return arr


def vec(mat: np.ndarray) -> np.ndarray:
    """
    Stack the columns of ``mat`` into a single vector.

    :param np.ndarray mat: Two-dimensional array.
    :return np.ndarray: Vector of length ``rows * cols``.
    """
    mat = _as_matrix(mat)
    return mat.reshape(-1, order="F")


def unvec(vector: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """
    Inverse of :func:`vec`.

    :param np.ndarray vector: Column-stacked vector.
    :param int rows: Number of rows in the result.
    :param int cols: Number of columns in the result.
    :return np.ndarray: A ``rows x cols`` matrix.
    """
    vector = np.asarray(vector)
    if vector.ndim != 1:
        raise ValueError(f"Expected a vector, got shape {vector.shape}.")
    if rows < 1 or cols < 1 or vector.size != rows * cols:
        raise ValueError(
            f"Can't reshape a vector of length {vector.size} into {rows}x{cols}."
        )
    return vector.reshape((rows, cols), order="F")


def kron(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """ Kronecker product, dimensions (rA * rB) x (cA * cB) """
    return np.kron(_as_matrix(left, "left"), _as_matrix(right, "right"))


def blkdiag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """
    Block-diagonal matrix built from ``blocks``. Off-block entries are exactly zero.

    :param Sequence[np.ndarray] blocks: Non-empty sequence of 2D blocks.
    """
    if len(blocks) == 0:
        raise ValueError("blkdiag needs at least one block.")
    return scipy.linalg.block_diag(*[_as_matrix(block, "block") for block in blocks])


def numerical_rank(mat: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """
    Number of singular values above ``rel_tol`` times the largest one.

    :param np.ndarray mat: Matrix to inspect.
    :param float rel_tol: Relative threshold, must be positive.
    :return int: Numerical rank.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive.")
    mat = _as_matrix(mat)
    if mat.size == 0:
        return 0
    svals = scipy.linalg.svdvals(mat)
    if svals[0] == 0:
        return 0
    return int(np.count_nonzero(svals > rel_tol * svals[0]))


def lstsq_minnorm(
    mat: np.ndarray, rhs: np.ndarray, rel_tol: float = RANK_REL_TOL
) -> Tuple[np.ndarray, int]:
    """
    Minimum-norm least-squares solution of ``mat @ x = rhs``.

    Uses the SVD-based LAPACK driver ``gelsd``. ``rhs`` may be a vector or a
    matrix of right-hand sides.

    :param np.ndarray mat: System matrix, possibly rank deficient.
    :param np.ndarray rhs: Right-hand side(s), ``len(rhs) == mat.shape[0]``.
    :param float rel_tol: Relative singular-value cutoff.
    :return Tuple[np.ndarray, int]: The solution and the numerical rank of ``mat``.
    """
    mat = _as_matrix(mat)
    rhs = np.asarray(rhs)
    if rhs.shape[0] != mat.shape[0]:
        raise ValueError(
            f"Right-hand side has {rhs.shape[0]} rows, matrix has {mat.shape[0]}."
        )
    solution, _, rank, _ = scipy.linalg.lstsq(
        mat, rhs, cond=rel_tol, lapack_driver="gelsd"
    )
    return solution, int(rank)
