"""Interchangeable reduced-SVD backends: dense, Lanczos, block power."""

from .base import EPS_M, Bidiagonal, RankCriterion, ReducedSVD, cut_rank, small_svd
from .dense import dense_svd
from .lanczos import lanczos_svd
from .pivoted_qr import pivoted_qr, trailing_rank
from .power import power_svd, random_orthonormal

BACKENDS = ("dense", "lanczos", "power")

__all__ = [
    "BACKENDS", "EPS_M", "Bidiagonal", "RankCriterion", "ReducedSVD", "cut_rank",
    "dense_svd", "lanczos_svd", "pivoted_qr", "power_svd", "random_orthonormal",
    "reduced_svd", "small_svd", "trailing_rank",
]


def reduced_svd(A, backend: str, criterion: RankCriterion | None = None, *, seed=0,
                r0: int | None = None, expected_rank: int | None = None) -> ReducedSVD:
    """Dispatch to one backend by name.

    ``r0`` is required for ``power``; ``expected_rank`` only sizes the Lanczos
    iteration cap.
    """
    if backend == "dense":
        return dense_svd(A, criterion)
    if backend == "lanczos":
        return lanczos_svd(A, criterion=criterion, rng_seed=seed, expected_rank=expected_rank)
    if backend == "power":
        if r0 is None:
            raise ValueError("the power backend needs a rank overestimate r0")
        return power_svd(A, r0, criterion=criterion, rng_seed=seed)
    raise ValueError(f"unknown SVD backend {backend!r}; choose from {BACKENDS}")
