"""Block power method for the SVD with pivoted-QR rank determination."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, InputError, RankOverflowError
from .base import (RankCriterion, ReducedSVD, as_matrix, complex_gaussian, cut_rank,
                   residual_norm, small_svd)
from .pivoted_qr import pivoted_qr, trailing_rank


def random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    Q, _ = np.linalg.qr(complex_gaussian(rng, rows, cols))
    return Q


def _adjoint_times(A, X):
    # A^* X without materializing the conjugate transpose of A
    return (X.conj().T @ A).conj().T


def power_svd(A, r0: int, U0=None, V0=None, criterion: RankCriterion | None = None,
              max_iter: int = 100, rng_seed=0) -> ReducedSVD:
    """Reduced SVD of ``A`` given an overestimate ``r0`` of its rank.

    Alternates Q-factors of A V and A^* U.  In the first sweep the QR of A^* U
    is column pivoted and the rank is cut at the first i with
    ||R(i:, i:)||_F <= tol ||R||_F.  Later sweeps use plain QR on the reduced
    block.  Iteration stops once ||A V - U Q||_F <= tol ||A||_F (after at
    least one sweep), and the SVD
    of the small core Q rotates U and V into singular vectors.

    ``U0``/``V0`` default to orthonormalized seeded complex Gaussian blocks.
    Raises :class:`RankOverflowError` when no drop is found within ``r0``
    columns (the caller should raise ``r0``).
    """
    A = as_matrix(A)
    rows, cols = A.shape
    criterion = criterion or RankCriterion.machine()
    tol = criterion.relative_tol(A.shape)
    r0 = int(r0)
    if r0 < 1:
        raise InputError("r0 must be >= 1")
    r0 = min(r0, rows, cols)
    rng = np.random.default_rng(rng_seed)
    U = random_orthonormal(rng, rows, r0) if U0 is None else np.asarray(U0, complex)[:, :r0]
    V = random_orthonormal(rng, cols, r0) if V0 is None else np.asarray(V0, complex)[:, :r0]
    if U.shape != (rows, r0) or V.shape != (cols, r0):
        raise InputError("U0 and V0 must have r0 orthonormal columns")

    norm_A = float(np.linalg.norm(A))
    Q = U.conj().T @ (A @ V)
    res = float(np.linalg.norm(A @ V - U @ Q))
    history = [res]
    k = 0
    r = r0
    # at least one sweep, so the rank always comes from the pivoted QR
    while k == 0 or res > tol * norm_A:
        k += 1
        if k > max_iter:
            raise ConvergenceError(f"block power method exceeded {max_iter} iterations",
                                   state={"U": U, "V": V, "Q": Q, "rank": r,
                                          "residuals": history})
        U, _ = np.linalg.qr(A @ V)
        Vbar = _adjoint_times(A, U)
        if k == 1:
            Vq, Rv, perm = pivoted_qr(Vbar)
            drop = trailing_rank(Rv, tol)
            if drop is None:
                if r0 < min(rows, cols):
                    raise RankOverflowError(
                        f"no singular-value drop within r0={r0} columns; increase r0", r0=r0)
                drop = r0
            r = drop
            if r == 0:
                U, V, Q = U[:, :0], V[:, :0], np.zeros((0, 0), complex)
                break
            # R P^T restores the original column order of A^* U
            RPt = np.empty_like(Rv)
            RPt[:, perm] = Rv
            V = Vq[:, :r]
            U = U[:, :r]
            Q = RPt[:r, :r].conj().T
        else:
            V, Rv = np.linalg.qr(Vbar)
            Q = Rv.conj().T
        res = float(np.linalg.norm(A @ V - U @ Q))
        history.append(res)

    UQ, s, VQ = small_svd(Q) if Q.size else (Q, np.zeros(0), Q)
    U = U @ UQ
    V = V @ VQ
    rank_qr = r
    r = cut_rank(s, tol)
    U, s, V = U[:, :r], s[:r], V[:, :r]
    return ReducedSVD(
        U=U, sigma=s, V=V, backend="power", tol=tol, norm_fro=norm_A,
        residual=residual_norm(A, U, s, V), iterations=k,
        info={"residual_history": history, "rank_pivoted_qr": rank_qr, "r0": r0},
    )
