"""Numerical kernels: rank-thresholded SVD and minimum-norm least squares.

Both are thin policy layers over LAPACK. The pseudo-inverse cutoff for the
least-squares path is the conventional max(m, p) * machine epsilon * s_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SvdResult", "truncated_svd", "lstsq_minnorm"]


@dataclass
class SvdResult:
    """Thin SVD truncated to ``kept`` components.

    u: rows x kept, orthonormal columns
    s: kept singular values, nonincreasing
    v: cols x kept, orthonormal columns
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    kept: int

    def reconstruct(self) -> np.ndarray:
        return self.u @ (self.s[:, None] * self.v.T)


def truncated_svd(m, max_rank=None) -> SvdResult:
    """Best rank-min(max_rank, rows, cols) approximation factors of ``m``.

    ``max_rank=None`` (or inf) keeps the full thin SVD. Trailing kept
    singular values may be numerically zero; they are not dropped.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got order {m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if max_rank is None or (isinstance(max_rank, float) and math.isinf(max_rank)):
        cap = min(m.shape)
    else:
        cap = int(max_rank)
        if cap < 1:
            raise ValueError(f"max_rank must be >= 1, got {cap}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    t = min(cap, *m.shape)
    return SvdResult(u[:, :t].copy(), s[:t].copy(), vt[:t].T.copy(), t)


def lstsq_minnorm(a, b, ridge: float = 0.0) -> np.ndarray:
    """Solve min ||a x - b||_2.

    With ``ridge`` zero, returns the minimum-norm solution, treating singular
    values below max(m, p) * eps * s_1 as zero. With ``ridge`` positive,
    solves the regularized normal equations (a^T a + ridge I) x = a^T b.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got order {a.ndim}")
    if a.shape[0] != b.size:
        raise ValueError(f"dimension mismatch: {a.shape[0]} rows vs {b.size} rhs entries")
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    p = a.shape[1]
    if a.shape[0] == 0:
        return np.zeros(p)
    if ridge > 0:
        g = a.T @ a + ridge * np.eye(p)
        return np.linalg.solve(g, a.T @ b)
    return np.linalg.lstsq(a, b, rcond=None)[0]
