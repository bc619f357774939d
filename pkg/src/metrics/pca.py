from typing import NamedTuple, Optional

import numpy as np

from src.metrics.metrics_schema import MetricsError

TOLERANCE = 1e-9
MAX_ITERATIONS = 1000
SQUARINGS = 24
_START_SEED = 0


class PcaResult(NamedTuple):
    component: Optional[np.ndarray]
    eigenvalue: float
    degenerate: bool
    iterations: int


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    for value in vector:
        if abs(value) > 1e-12:
            return vector if value > 0 else -vector
    return vector


def pca_first_component(
    rows, tol: float = TOLERANCE, max_iter: int = MAX_ITERATIONS
) -> PcaResult:
    """
    Dominant principal axis of a row matrix by power iteration on its covariance.

    The start vector is first multiplied by a high power of the covariance
    (repeated squaring), so small eigengaps do not stall the iteration.

    Args:
        rows: N x D matrix, N >= 2.
        tol: Stop when successive unit iterates differ by less than this.
        max_iter: Iteration cap.

    Returns:
        PcaResult: Unit-norm component whose first nonzero entry is positive; when
        every row is identical the result is flagged degenerate with no component.

    Raises:
        MetricsError: If fewer than 2 rows or non-finite values are given.
    """
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise MetricsError(f"PCA needs an N x D matrix with N ≥ 2, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise MetricsError("PCA input contains non-finite values")

    centered = matrix - matrix.mean(axis=0)
    covariance = centered.T @ centered / matrix.shape[0]
    if not np.any(np.ptp(matrix, axis=0) > 0.0) or not np.any(np.abs(covariance) > 0.0):
        return PcaResult(component=None, eigenvalue=0.0, degenerate=True, iterations=0)

    # repeated squaring raises the covariance to the power 2**SQUARINGS
    power = covariance / np.linalg.norm(covariance)
    for _ in range(SQUARINGS):
        power = power @ power
        power /= np.linalg.norm(power)

    vector = np.random.default_rng(_START_SEED).normal(size=covariance.shape[0])
    vector = power @ vector
    if np.linalg.norm(vector) == 0.0:
        vector = np.random.default_rng(_START_SEED).normal(size=covariance.shape[0])
    vector /= np.linalg.norm(vector)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        product = covariance @ vector
        norm = np.linalg.norm(product)
        if norm == 0.0:
            return PcaResult(component=None, eigenvalue=0.0, degenerate=True, iterations=iterations)
        updated = product / norm
        # compare up to sign
        change = min(np.linalg.norm(updated - vector), np.linalg.norm(updated + vector))
        vector = updated
        if change < tol:
            break

    vector = _fix_sign(vector)
    vector = vector / np.linalg.norm(vector)
    eigenvalue = float(vector @ covariance @ vector)
    return PcaResult(component=vector, eigenvalue=eigenvalue, degenerate=False, iterations=iterations)
