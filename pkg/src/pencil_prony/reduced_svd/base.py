"""Types and helpers shared by the reduced-SVD backends."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

EPS_M = np.finfo(float).eps


@dataclass(frozen=True)
class RankCriterion:
    """How a numerical rank is cut from a spectrum.

    ``machine``: relative tolerance max(rows, cols) * eps_M, absorbing the
    rounding error of the SVD itself.  ``noise``: a user tolerance, normally
    the relative noise level of the samples.  Both are relative to sigma_1
    when truncating a spectrum, and relative to ||A||_F inside iterations.
    """

    mode: str = "machine"
    tol: float | None = None

    def __post_init__(self):
        if self.mode not in ("machine", "noise"):
            raise InputError(f"unknown rank criterion mode {self.mode!r}")
        if self.mode == "noise" and (self.tol is None or not self.tol >= 0):
            raise InputError("noise mode requires a tolerance >= 0")

    @classmethod
    def machine(cls) -> "RankCriterion":
        return cls("machine")

    @classmethod
    def noise(cls, tol: float) -> "RankCriterion":
        return cls("noise", float(tol))

    def relative_tol(self, shape) -> float:
        if self.mode == "machine":
            return max(shape) * EPS_M
        return float(self.tol)


@dataclass(frozen=True)
class Bidiagonal:
    """Upper bidiagonal factor from Lanczos bidiagonalization.

    ``alpha[j]`` is the diagonal; ``beta[0]`` is the starting-vector norm and
    ``beta[j]`` (j >= 1) couples v_{j+1} to u_j.  The trailing entry of
    ``beta`` is the value that triggered the stop.  ``restarted`` lists the
    diagonal (alpha-stop) or superdiagonal (beta-stop) positions that were
    zeroed when the recursion was continued with a fresh vector.
    """

    alpha: np.ndarray
    beta: np.ndarray
    stop: str
    restarted: tuple = ()

    @property
    def rank(self) -> int:
        return len(self.alpha)

    def matrix(self) -> np.ndarray:
        k = len(self.alpha)
        cols = k + 1 if self.stop == "alpha" else k
        B = np.zeros((k, cols))
        B[np.arange(k), np.arange(k)] = self.alpha
        for j in range(min(k, cols - 1)):
            B[j, j + 1] = self.beta[j + 1]
        return B


@dataclass(frozen=True)
class ReducedSVD:
    """A = U diag(sigma) V^* restricted to the detected numerical rank."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    backend: str
    tol: float
    norm_fro: float
    residual: float
    tail_sigma: np.ndarray | None = None
    iterations: int = 0
    restarts: int = 0
    info: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    @property
    def tail_norm(self) -> float:
        """sqrt(sum of discarded sigma^2) when known, else the residual norm."""
        if self.tail_sigma is not None:
            return float(np.sqrt(np.sum(self.tail_sigma ** 2)))
        return self.residual

    @property
    def tail_is_surrogate(self) -> bool:
        return self.tail_sigma is None


def cut_rank(sigma: np.ndarray, rel_tol: float) -> int:
    """Number of leading sigma_i with sigma_i >= rel_tol * sigma_1."""
    if sigma.size == 0 or sigma[0] <= 0:
        return 0
    below = np.nonzero(sigma < rel_tol * sigma[0])[0]
    return int(below[0]) if below.size else int(sigma.size)


def small_svd(B: np.ndarray):
    """Dense SVD used for the baseline and for every small projected matrix."""
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    return U, s, Vh.conj().T


def residual_norm(A: np.ndarray, U: np.ndarray, sigma: np.ndarray, V: np.ndarray,
                  rows_per_block: int = 1024) -> float:
    """||A - U diag(sigma) V^*||_F computed in row blocks."""
    US = U * sigma
    Vh = V.conj().T
    total = 0.0
    for a in range(0, A.shape[0], rows_per_block):
        b = min(a + rows_per_block, A.shape[0])
        total += float(np.sum(np.abs(A[a:b] - US[a:b] @ Vh) ** 2))
    return float(np.sqrt(total))


def complex_gaussian(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise InputError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    return A
