"""Pencil matrices S_l and C_mu, their joint diagonalization, and node extraction.

With T = U diag(sigma) V^* reduced to rank m, each

    S_l = U^* T_l V diag(sigma)^-1

is an m x m matrix whose eigenvalues are the l-th node components z_j(l).  All
S_l share one eigenvector basis, so W is taken from a single random
combination C_mu = sum_l mu_l S_l and then applied to every S_l.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError, InputError, SingularBasisError, SingularScaleError
from .reduced_svd import EPS_M, ReducedSVD

__all__ = [
    "PencilSet",
    "NodeSet",
    "compute_S",
    "compute_C_mu",
    "combine",
    "random_mu",
    "eigendecompose",
    "eigenvalue_collision",
    "min_pairwise_gap",
    "simultaneous_diagonalize",
    "extract_t",
]

EIG_RESIDUAL_TOL = 1e-10
COLLISION_FACTOR = 1e3
ILL_CONDITIONED = 1.0 / np.sqrt(EPS_M)
MODULUS_BAND = 0.5


@dataclass(frozen=True)
class PencilSet:
    """The S_l, the combination weights, C_mu and its eigendecomposition."""

    S: tuple
    mu: np.ndarray
    C_mu: np.ndarray
    W: np.ndarray
    eigvals: np.ndarray

    @property
    def m(self) -> int:
        return self.C_mu.shape[0]

    @property
    def d(self) -> int:
        return len(self.S)


@dataclass(frozen=True)
class NodeSet:
    """Recovered nodes z (m, d) and frequencies t (m, d), plus diagnostics."""

    z: np.ndarray
    t: np.ndarray
    offdiag: np.ndarray
    kappa_W: float
    sigma_min_W: float
    warnings: tuple = field(default=())
    lu: tuple | None = field(default=None, repr=False)


def _apply(T, X, workers):
    if hasattr(T, "matmat"):
        return T.matmat(X, workers)
    return np.asarray(T) @ X


def compute_S(svd: ReducedSVD, T_ell, workers: int = 1) -> np.ndarray:
    """U^* T_ell V diag(sigma)^-1, with the inverse applied as column scaling.

    ``T_ell`` may be a dense array or any operator with ``matmat``.
    """
    sigma = np.asarray(svd.sigma)
    if sigma.size == 0:
        raise InputError("reduced SVD has rank 0")
    if T_ell.shape != (svd.U.shape[0], svd.V.shape[0]):
        raise InputError(f"matrix of shape {T_ell.shape} does not match the SVD factors")
    if not sigma[-1] > np.finfo(float).tiny:
        raise SingularScaleError(f"smallest retained singular value {sigma[-1]:.3e} underflows")
    TV = _apply(T_ell, svd.V, workers)
    return (svd.U.conj().T @ TV) / sigma[None, :]


# C_mu = U^* B_mu V Sigma^-1 has exactly the same form
compute_C_mu = compute_S


def combine(S, mu) -> np.ndarray:
    """sum_l mu_l S_l in fixed l order."""
    mu = np.asarray(mu, dtype=complex).reshape(-1)
    if len(S) != mu.shape[0]:
        raise InputError(f"{len(S)} matrices but {mu.shape[0]} weights")
    out = mu[0] * S[0]
    for coef, Sl in zip(mu[1:], S[1:]):
        out = out + coef * Sl
    return out


def random_mu(d: int, rng_seed=0) -> np.ndarray:
    """Complex Gaussian d-vector normalized to unit 2-norm."""
    if d < 1:
        raise InputError("d must be >= 1")
    rng = np.random.default_rng(rng_seed)
    mu = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return mu / np.linalg.norm(mu)


def eigendecompose(C: np.ndarray):
    """Eigenvalues and unit-norm eigenvectors of a general complex matrix.

    Uses LAPACK's Hessenberg reduction with shifted QR.  Every eigenpair must
    satisfy ||C w - lambda w|| <= 1e-10 ||C||_F.

    Raises
    ------
    ConvergenceError
        If the QR iteration fails or an eigenpair misses the residual bound.
    """
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 1:
        raise InputError(f"expected a nonempty square matrix, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise InputError("matrix has non-finite entries")
    try:
        lam, W = np.linalg.eig(C)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    W = W / np.linalg.norm(W, axis=0)[None, :]
    res = np.linalg.norm(C @ W - W * lam[None, :], axis=0)
    normC = np.linalg.norm(C)
    if np.any(res > EIG_RESIDUAL_TOL * max(normC, np.finfo(float).tiny)):
        raise ConvergenceError(
            f"eigenpair residual {res.max():.3e} exceeds {EIG_RESIDUAL_TOL} ||C||_F",
            state={"eigvals": lam, "W": W, "residuals": res})
    return W, lam


def min_pairwise_gap(values) -> float:
    v = np.asarray(values).reshape(-1)
    if v.size < 2:
        return float("inf")
    diff = np.abs(v[:, None] - v[None, :])
    diff[np.diag_indices(v.size)] = np.inf
    return float(diff.min())


def eigenvalue_collision(eigvals, normC: float) -> bool:
    """True when two eigenvalues are closer than 1e3 eps_M ||C||_F."""
    return min_pairwise_gap(eigvals) < COLLISION_FACTOR * EPS_M * normC


def simultaneous_diagonalize(pencil: PencilSet) -> NodeSet:
    """Diagonals of W^-1 S_l W for every l, via one LU factorization of W.

    ``offdiag[l]`` is ||D_l - diag(D_l)||_F / ||D_l||_F.  An ill-conditioned W
    or node moduli outside [0.5, 1.5] are reported in ``warnings``.

    Raises
    ------
    SingularBasisError
        If sigma_min(W) <= m eps_M ||W||_2; redrawing mu usually helps.
    """
    W = np.asarray(pencil.W, dtype=complex)
    m = W.shape[0]
    sw = np.linalg.svd(W, compute_uv=False)
    if not sw[-1] > m * EPS_M * sw[0]:
        raise SingularBasisError(
            f"eigenvector matrix is numerically singular (sigma_min={sw[-1]:.3e}); redraw mu")
    kappa = float(sw[0] / sw[-1])
    lu = scipy.linalg.lu_factor(W, check_finite=False)
    z = np.empty((m, pencil.d), dtype=complex)
    offdiag = np.empty(pencil.d)
    for ell, S in enumerate(pencil.S):
        D = scipy.linalg.lu_solve(lu, S @ W, check_finite=False)
        diag = np.diag(D).copy()
        z[:, ell] = diag
        normD = np.linalg.norm(D)
        off = np.linalg.norm(D - np.diag(diag))
        offdiag[ell] = off / normD if normD > 0 else 0.0
    warns = []
    if kappa > ILL_CONDITIONED:
        warns.append(f"ill-conditioned eigenvector basis: kappa(W) = {kappa:.3e}")
    mod = np.abs(z)
    if np.any(np.abs(mod - 1.0) > MODULUS_BAND):
        warns.append(f"node moduli in [{mod.min():.3f}, {mod.max():.3f}], outside [0.5, 1.5]")
    return NodeSet(z=z, t=extract_t(z), offdiag=offdiag, kappa_W=kappa,
                   sigma_min_W=float(sw[-1]), warnings=tuple(warns), lu=lu)


def extract_t(z) -> np.ndarray:
    """t = (-arg z / 2 pi) mod 1, componentwise, in [0, 1)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("node component is exactly zero; its argument is undefined")
    t = np.mod(-np.angle(z) / (2.0 * np.pi), 1.0)
    # mod can round a tiny negative up to exactly 1.0
    t[t >= 1.0] = 0.0
    return t
