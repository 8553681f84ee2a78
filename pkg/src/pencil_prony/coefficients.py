"""Coefficient recovery by linear least squares on the node matrix A = [z_j^k]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import IndexSet
from .errors import InputError, RankDeficiencyError
from .reduced_svd import EPS_M

__all__ = ["LeastSquaresResult", "power_tables", "build_A", "solve_ls"]


@dataclass(frozen=True)
class LeastSquaresResult:
    """c minimizing ||A^T c - f||_2, its relative residual, and kappa_2(A)."""

    c: np.ndarray
    residual_rel: float
    cond_A: float


def power_tables(z, n: int) -> np.ndarray:
    """P[i, j, p] = z_j(i)^p for p = 0..n, by repeated multiplication."""
    z = np.asarray(z, dtype=complex)
    m, d = z.shape
    P = np.empty((d, m, n + 1), dtype=complex)
    P[:, :, 0] = 1.0
    for p in range(1, n + 1):
        P[:, :, p] = P[:, :, p - 1] * z.T
    return P


def build_A(z, idx: IndexSet) -> np.ndarray:
    """A[j, col(k)] = prod_i z_j(i)^k(i) over I_n in ``idx.order``."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 2 or z.shape[1] != idx.d:
        raise InputError(f"nodes must have shape (m, {idx.d}), got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InputError("nodes must be finite")
    P = power_tables(z, idx.n)
    A = P[0][:, idx.order[:, 0]]
    for i in range(1, idx.d):
        A = A * P[i][:, idx.order[:, i]]
    return A


def solve_ls(A, f) -> LeastSquaresResult:
    """Least-squares solution of A^T c = f by Householder QR of A^T.

    Raises
    ------
    RankDeficiencyError
        If min |R(i, i)| <= N eps_M ||A||_F, i.e. A^T has numerically dependent
        columns; this usually means two recovered nodes coincide.
    """
    A = np.asarray(A, dtype=complex)
    f = np.asarray(f, dtype=complex).reshape(-1)
    m, N = A.shape
    if f.shape[0] != N:
        raise InputError(f"f has length {f.shape[0]}, expected {N}")
    if N < m:
        raise InputError(f"underdetermined: N={N} < m={m}")
    Q, R = np.linalg.qr(A.T)
    normA = np.linalg.norm(A)
    rdiag = np.abs(np.diag(R))
    if rdiag.size == 0 or rdiag.min() <= N * EPS_M * normA:
        raise RankDeficiencyError(
            f"node matrix is numerically rank deficient (min |R_ii| = {rdiag.min():.3e})")
    c = scipy.linalg.solve_triangular(R, Q.conj().T @ f, check_finite=False)
    normf = np.linalg.norm(f)
    res = np.linalg.norm(A.T @ c - f)
    s = np.linalg.svd(R, compute_uv=False)
    return LeastSquaresResult(c=c, residual_rel=float(res / normf) if normf > 0 else float(res),
                              cond_A=float(s[0] / s[-1]))
