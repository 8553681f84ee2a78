"""Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.

The recursion

    A v_j   = beta_j u_{j-1} + alpha_j u_j
    A^* u_j = alpha_j v_j    + beta_{j+1} v_{j+1}

builds orthonormal U, V and an upper bidiagonal B with AV = UB.  It stops when
alpha or beta falls below tol * ||A||_F.  A stop can be premature when the
starting vector lies in a small invariant subspace.  So on every stop a
random vector is projected onto the orthogonal complement of the current
basis and tested for membership in the relevant null space.  If it is not
in that null space, the recursion continues from it.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, InputError
from .base import (Bidiagonal, RankCriterion, ReducedSVD, as_matrix, complex_gaussian,
                   cut_rank, residual_norm, small_svd)


def _reorthogonalize(x, basis):
    # two passes of modified Gram-Schmidt against the whole basis
    for _ in range(2):
        for q in basis:
            x = x - q * np.vdot(q, x)
    return x


def _complement_probe(rng, basis, dim):
    """Random vector orthogonal to ``basis``, or None if the basis is complete."""
    if len(basis) >= dim:
        return None
    y = _reorthogonalize(complex_gaussian(rng, dim), basis)
    return y if np.linalg.norm(y) > 0 else None


def lanczos_svd(A, p1=None, criterion: RankCriterion | None = None, rng_seed=0,
                max_iter: int | None = None, expected_rank: int | None = None) -> ReducedSVD:
    """Reduced SVD by restarted Lanczos bidiagonalization.

    Parameters
    ----------
    A : (rows, cols) array
    p1 : (cols,) array, optional
        Starting vector; a seeded complex Gaussian when omitted.
    criterion : RankCriterion
        Sets the stopping tolerance (relative to ||A||_F) and the final
        truncation of the bidiagonal spectrum (relative to sigma_1).
    rng_seed : int
        Seeds the default starting vector and the restart probes.
    max_iter : int, optional
        Cap on recursion steps, default 4 * expected_rank + 40.
    expected_rank : int, optional
        Only used for the default cap; min(rows, cols) when omitted.
    """
    A = as_matrix(A)
    rows, cols = A.shape
    criterion = criterion or RankCriterion.machine()
    tol = criterion.relative_tol(A.shape)
    rng = np.random.default_rng(rng_seed)
    if p1 is None:
        p1 = complex_gaussian(rng, cols)
    p1 = np.asarray(p1, dtype=complex).reshape(-1)
    if p1.shape[0] != cols:
        raise InputError(f"starting vector has length {p1.shape[0]}, expected {cols}")
    beta = float(np.linalg.norm(p1))
    if beta == 0.0:
        raise InputError("starting vector must be nonzero")
    if max_iter is None:
        r_exp = min(rows, cols) if expected_rank is None else min(expected_rank, rows, cols)
        max_iter = 4 * r_exp + 40

    norm_A = float(np.linalg.norm(A))
    if norm_A == 0.0:
        empty = np.zeros((rows, 0), complex)
        return ReducedSVD(U=empty, sigma=np.zeros(0), V=np.zeros((cols, 0), complex),
                          backend="lanczos", tol=tol, norm_fro=0.0, residual=0.0)
    thresh = tol * norm_A

    Us, Vs = [], [p1 / beta]
    alphas, betas = [], [beta]
    restarted = []
    checks = 0
    coupling = 0.0
    steps = 0
    while True:
        steps += 1
        if steps > max_iter:
            raise ConvergenceError(
                f"Lanczos bidiagonalization exceeded {max_iter} steps",
                state={"U": np.array(Us).T, "V": np.array(Vs).T,
                       "alpha": np.array(alphas), "beta": np.array(betas)})
        v = Vs[-1]
        r = A @ v
        if Us:
            r = r - coupling * Us[-1]
        r = _reorthogonalize(r, Us)
        alpha = float(np.linalg.norm(r))
        if alpha <= thresh:
            checks += 1
            y = _complement_probe(rng, Us, rows)
            if y is None or np.linalg.norm(y.conj() @ A) <= thresh * np.linalg.norm(y):
                stop = "alpha"
                betas.append(alpha)
                break
            u = y / np.linalg.norm(y)
            restarted.append(len(alphas))
            alpha = 0.0
        else:
            u = r / alpha
        Us.append(u)
        alphas.append(alpha)

        p = _reorthogonalize((u.conj() @ A).conj() - alpha * v, Vs)
        coupling = float(np.linalg.norm(p))
        if coupling <= thresh:
            checks += 1
            w = _complement_probe(rng, Vs, cols)
            if w is None or np.linalg.norm(A @ w) <= thresh * np.linalg.norm(w):
                stop = "beta"
                betas.append(coupling)
                break
            v_next = w / np.linalg.norm(w)
            restarted.append(len(betas))
            coupling = 0.0
        else:
            v_next = p / coupling
        Vs.append(v_next)
        betas.append(coupling)

    k = len(Us)
    # alpha stop: B is k x (k+1); beta stop: B is k x k.  Either way the last
    # entry of betas is the value that triggered the stop.
    bidiag = Bidiagonal(np.array(alphas), np.array(betas), stop, tuple(restarted))
    if k == 0:
        empty = np.zeros((rows, 0), complex)
        return ReducedSVD(U=empty, sigma=np.zeros(0), V=np.zeros((cols, 0), complex),
                          backend="lanczos", tol=tol, norm_fro=norm_A, residual=norm_A,
                          iterations=steps, restarts=checks, info={"bidiagonal": bidiag})
    B = bidiag.matrix()
    UB, s, VB = small_svd(B)
    Umat = np.array(Us).T
    Vmat = np.array(Vs[:B.shape[1]]).T
    # small_svd is economy-size, so in the alpha-stop case the null-space
    # column of the (k+1)-dimensional right factor is discarded here
    U = Umat @ UB
    V = Vmat @ VB
    r = cut_rank(s, tol)
    U, s, V = U[:, :r], s[:r], V[:, :r]
    return ReducedSVD(
        U=U, sigma=s, V=V, backend="lanczos", tol=tol, norm_fro=norm_A,
        residual=residual_norm(A, U, s, V), iterations=steps, restarts=checks,
        info={"bidiagonal": bidiag, "stop": stop, "restart_positions": tuple(restarted)},
    )
