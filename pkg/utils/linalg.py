"""Dense linear-algebra contracts: SVD, norms, inner products."""
import numpy as np
import scipy.linalg
import structlog

from core.errors import NumericalError
from models.matrix import Matrix, SvdResult, as_matrix, require_same_shape

logger = structlog.get_logger(__name__)


def svd(m: Matrix) -> SvdResult:
    """
    Thin singular value decomposition.

    Uses LAPACK gesdd and falls back to the slower but more robust gesvd
    driver when gesdd does not converge.

    Args:
        m: Finite input matrix

    Returns:
        SvdResult with singular values sorted nonincreasing

    Raises:
        NumericalError: If m is not finite or neither driver converges
    """
    m = as_matrix(m)
    try:
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("svd_gesdd_failed", shape=m.shape)
        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"SVD did not converge for {m.shape} matrix: {e}") from e
    return SvdResult(u=u, singular_values=s, vt=vt)


def singular_values(m: Matrix) -> np.ndarray:
    """Singular values only, nonincreasing."""
    m = as_matrix(m)
    try:
        return scipy.linalg.svdvals(m)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD did not converge for {m.shape} matrix: {e}") from e


def fro_norm(m: Matrix) -> float:
    """Frobenius norm sqrt(sum of squared entries)."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64)))


def inner(a: Matrix, b: Matrix) -> float:
    """Frobenius inner product <a, b> = sum a_ij b_ij."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_same_shape(a, b, "inner product operands")
    return float(np.vdot(a, b))


def spectral_norm_lower_bound(c: Matrix) -> float:
    """
    Smallest eigenvalue of C·Cᵀ, i.e. sigma_C with <CCᵀx, x> >= sigma_C·||x||².

    Computed as the square of the smallest singular value of C. A matrix with
    more rows than columns, or with numerically dependent rows, gives 0.
    """
    c = as_matrix(c, "constraint matrix")
    rows, cols = c.shape
    if rows > cols:
        return 0.0
    s = singular_values(c)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    smallest = s[-1]
    if smallest <= max(rows, cols) * np.finfo(np.float64).eps * s[0]:
        return 0.0
    return float(smallest * smallest)


def best_rank_approximation(m: Matrix, rank: int) -> Matrix:
    """Best rank-r approximation by truncated SVD."""
    result = svd(m)
    r = max(0, min(rank, result.singular_values.size))
    return (result.u[:, :r] * result.singular_values[:r]) @ result.vt[:r, :]


def numerical_rank(m: Matrix, tol: float = 1e-10) -> int:
    """Count of singular values above tol·max(1, s_max)."""
    s = singular_values(m)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))
