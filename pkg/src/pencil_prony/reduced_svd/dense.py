import numpy as np

from .base import RankCriterion, ReducedSVD, as_matrix, cut_rank, small_svd


def dense_svd(A, criterion: RankCriterion | None = None) -> ReducedSVD:
    """Full SVD of ``A`` truncated at the numerical rank.

    All min(rows, cols) singular values are computed (LAPACK divide and
    conquer); those below ``criterion`` relative to sigma_1 are dropped but
    kept in ``tail_sigma`` so the exact discarded mass is available.
    """
    A = as_matrix(A)
    criterion = criterion or RankCriterion.machine()
    tol = criterion.relative_tol(A.shape)
    U, s, V = small_svd(A)
    r = cut_rank(s, tol)
    tail = s[r:]
    return ReducedSVD(
        U=U[:, :r], sigma=s[:r], V=V[:, :r], backend="dense", tol=tol,
        norm_fro=float(np.sqrt(np.sum(s ** 2))),
        residual=float(np.sqrt(np.sum(tail ** 2))),
        tail_sigma=tail, info={"sigma_full": s},
    )
