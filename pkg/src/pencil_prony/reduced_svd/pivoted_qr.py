"""Householder QR with column pivoting, used for rank detection."""

import numpy as np

from .base import as_matrix


def pivoted_qr(A):
    """Reduced QR factorization with column pivoting, ``A[:, perm] = Q @ R``.

    At step j the remaining column of largest norm is moved into position j,
    so ``|R[j, j]|`` is nonincreasing.  Column norms are recomputed from the
    trailing submatrix at every step rather than downdated, which avoids the
    cancellation problems of norm downdating at the cost of O(mn) extra work
    per step; the matrices this is used on are tall and thin.

    Returns
    -------
    Q : ndarray, shape (m, k)
        Orthonormal columns, k = min(m, n).
    R : ndarray, shape (k, n)
        Upper triangular (trapezoidal when n > m).
    perm : ndarray of int, shape (n,)
        Column permutation.
    """
    A = as_matrix(A)
    m, n = A.shape
    k = min(m, n)
    R = np.array(A, dtype=complex)
    perm = np.arange(n)
    reflectors = []
    for j in range(k):
        norms = np.einsum("ij,ij->j", R[j:, j:].conj(), R[j:, j:]).real
        p = j + int(np.argmax(norms))
        if p != j:
            R[:, [j, p]] = R[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]
        x = R[j:, j]
        nx = np.sqrt(norms[p - j])
        if nx == 0.0:
            reflectors.append(None)
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        R[j:, j:] -= 2.0 * np.outer(v, v.conj() @ R[j:, j:])
        R[j + 1:, j] = 0.0
        reflectors.append(v)
    Q = np.eye(m, k, dtype=complex)
    for j in range(k - 1, -1, -1):
        v = reflectors[j]
        if v is not None:
            Q[j:, :] -= 2.0 * np.outer(v, v.conj() @ Q[j:, :])
    return Q, np.triu(R[:k, :]), perm


def trailing_rank(R, tol: float) -> int | None:
    """First i with ||R[i:, i:]||_F <= tol * ||R||_F, i.e. the rank before the drop.

    Returns None when no such i < k exists (no drop within the factor).
    """
    R = np.asarray(R)
    k = min(R.shape)
    total = np.linalg.norm(R)
    for i in range(k):
        if np.linalg.norm(R[i:, i:]) <= tol * total:
            return i
    return None
