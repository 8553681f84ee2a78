"""Noise diagnostics: rank checks, spectral gaps, condition numbers, error bounds.

For samples with relative error at most eps, ||Delta T||_F <= eps ||T||_F.
First-order perturbation theory then bounds the recovered nodes and
coefficients through a chain of quantities: the retained singular values,
their gaps delta_min, the eigenvalue separation gamma of C_mu, the
conditioning of the eigenvector basis W, and the conditioning of the node
matrix A.  At run time only perturbed quantities exist, so the gaps are
self-gaps of the perturbed spectrum (``estimate_kind = "self-gap"``); a test
harness holding both spectra can supply clean-vs-noisy gaps instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError

__all__ = [
    "NoiseDiagnostics",
    "ErrorBounds",
    "rank_drop_check",
    "numerical_rank",
    "hoffman_wielandt_check",
    "tail_bound_check",
    "delta_min_self",
    "delta_min_between",
    "gamma_self",
    "gamma_between",
    "eta",
    "error_bounds",
    "forward_error_estimate",
    "collect_diagnostics",
    "torus_distance",
    "align_nodes",
    "max_t_error",
    "rel_c_error",
]

DEFAULT_G = 8.0


@dataclass(frozen=True)
class ErrorBounds:
    """First-order forward-error bounds.

    ``lam`` bounds ||Delta Lambda_l||_F, hence every |Delta z_j(l)|.
    ``bound_t`` is the per-component frequency bound lam / (pi eta), infinite
    when some node component is real or purely imaginary (eta = 0).
    ``bound_t_arg`` bounds the same error through the argument directly,
    |Delta t| <= |Delta z| / (2 pi) for unit-modulus z, and needs no eta.
    ``bound_c`` bounds ||c~ - c|| / ||c||; it is infinite when
    kappa(A) sqrt(m) zeta >= 1.  ``zeta_order`` is the simplified order
    expression for zeta with all constants dropped.
    """

    lam: float
    bound_t: float
    bound_t_arg: float
    zeta: float
    zeta_order: float
    bound_c: float
    t_unbounded: bool
    c_unbounded: bool


@dataclass(frozen=True)
class NoiseDiagnostics:
    sigma_tilde_m: float
    tail_norm: float
    tail_is_surrogate: bool
    delta_min: float
    gamma: float
    eta: float
    kappa_W: float
    sigma_min_W: float
    kappa_A: float
    g_const: float
    epsilon: float
    norm_T: float
    max_norm_T_ell: float
    rank_check: bool
    offdiag: tuple
    bounds: ErrorBounds
    estimate_kind: str = "self-gap"
    warnings: tuple = field(default=())

    @property
    def forward_error_estimate(self) -> float:
        return self.bounds.bound_c

    def to_dict(self) -> dict:
        out = asdict(self)
        out["offdiag"] = [float(x) for x in self.offdiag]
        out["warnings"] = list(self.warnings)
        out["forward_error_estimate"] = self.forward_error_estimate
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# rank criteria

def rank_drop_check(sigma, m: int, eps: float, normT_F: float) -> bool:
    """True iff sigma_{m+1} <= eps ||T||_F (sigma_{m+1} = 0 when absent)."""
    sigma = np.asarray(sigma, dtype=float)
    nxt = sigma[m] if m < sigma.size else 0.0
    return bool(nxt <= eps * normT_F)


def numerical_rank(sigma, eps: float, normT_F: float) -> int:
    """Smallest m passing :func:`rank_drop_check`."""
    sigma = np.asarray(sigma, dtype=float)
    for m in range(sigma.size + 1):
        if rank_drop_check(sigma, m, eps, normT_F):
            return m
    return int(sigma.size)


def _check_spectra(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"spectra differ in length: {a.size} vs {b.size}")
    for s in (a, b):
        if np.any(np.diff(s) > 0):
            raise InputError("spectra must be nonincreasing")
    return a, b


def hoffman_wielandt_check(sigma_clean, sigma_noisy, eps: float, normT_F: float) -> bool:
    """True iff sqrt(sum |sigma~_i - sigma_i|^2) <= eps ||T||_F."""
    a, b = _check_spectra(sigma_clean, sigma_noisy)
    return bool(np.linalg.norm(a - b) <= eps * normT_F)


def tail_bound_check(sigma_noisy, m: int, eps: float, normT_F: float) -> bool:
    """True iff sqrt(sum_{i>m} sigma~_i^2) <= eps ||T||_F."""
    s = np.asarray(sigma_noisy, dtype=float)
    return bool(np.linalg.norm(s[m:]) <= eps * normT_F)


# gaps

def delta_min_self(sigma, tail_first: float | None = None) -> float:
    """min_i min(min_{j != i} |s_i - s_j|, s_i) over the retained values.

    ``tail_first`` (the first discarded value) joins the j range when known.
    """
    s = np.asarray(sigma, dtype=float)
    if s.size == 0:
        return 0.0
    others = s if tail_first is None else np.append(s, tail_first)
    diff = np.abs(s[:, None] - others[None, :])
    diff[np.arange(s.size), np.arange(s.size)] = np.inf
    return float(min(diff.min(), s.min()))


def delta_min_between(sigma_clean, sigma_noisy_full) -> float:
    """min_i min(min_{j != i} |sigma_i - sigma~_j|, sigma_i), i over the clean retained values."""
    s = np.asarray(sigma_clean, dtype=float)
    t = np.asarray(sigma_noisy_full, dtype=float)
    diff = np.abs(s[:, None] - t[None, :])
    k = min(s.size, t.size)
    diff[np.arange(k), np.arange(k)] = np.inf
    return float(min(diff.min(), s.min()))


def gamma_self(eigvals) -> float:
    """Smallest pairwise distance between eigenvalues of C~_mu."""
    v = np.asarray(eigvals).reshape(-1)
    if v.size < 2:
        return float("inf")
    diff = np.abs(v[:, None] - v[None, :])
    diff[np.diag_indices(v.size)] = np.inf
    return float(diff.min())


def gamma_between(eig_clean, eig_noisy) -> float:
    """min over i != j of |lambda_j - lambda~_i|, after pairing by nearest assignment."""
    a = np.asarray(eig_clean).reshape(-1)
    b = np.asarray(eig_noisy).reshape(-1)
    if a.size != b.size:
        raise InputError("eigenvalue lists differ in length")
    if a.size < 2:
        return float("inf")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    b = b[cols[np.argsort(rows)]]
    diff = np.abs(a[:, None] - b[None, :])
    diff[np.diag_indices(a.size)] = np.inf
    return float(diff.min())


def eta(z) -> float:
    """min over all components of |Re z * Im z|."""
    z = np.asarray(z)
    return float(np.min(np.abs(z.real * z.imag))) if z.size else 0.0


# bounds

def error_bounds(diag, eps: float, d: int, m: int, n: int, N: int, normT_F: float,
                 max_normTl_F: float, lambda_norm: float = 1.0) -> ErrorBounds:
    """First-order bounds on node, frequency and coefficient errors.

    ``diag`` provides sigma_tilde_m, delta_min, gamma, eta, kappa_W,
    sigma_min_W, kappa_A and g_const.  With

        K   = 1 + (1 + 4 sqrt 2 + (2 + g) sqrt(2m)) ||T||_F / delta_min
        lam = eps (2 sqrt(md) ||Lambda_l||_2 / (gamma s_m sigma_min(W)) + 1 / s_m)
              * K * max_l ||T_l||_F * kappa(W)
        zeta = sqrt(mN) n d lam

    the bounds are |Delta t| <= lam / (pi eta) and
    ||Delta c|| / ||c|| <= 2 x / (1 - x), x = kappa(A) sqrt(m) zeta.
    """
    if eps < 0:
        raise InputError("eps must be >= 0")
    ingredients = {
        "sigma_tilde_m": diag.sigma_tilde_m, "delta_min": diag.delta_min, "gamma": diag.gamma,
        "kappa_W": diag.kappa_W, "sigma_min_W": diag.sigma_min_W, "kappa_A": diag.kappa_A,
        "g_const": diag.g_const, "normT_F": normT_F, "max_normTl_F": max_normTl_F,
    }
    for name, val in ingredients.items():
        if not val > 0:
            raise InputError(f"{name} must be positive, got {val}")
    if min(d, m, n, N) < 1:
        raise InputError("d, m, n, N must be >= 1")
    s_m, sw, kW = diag.sigma_tilde_m, diag.sigma_min_W, diag.kappa_W
    K = 1.0 + (1.0 + 4.0 * math.sqrt(2.0) + (2.0 + diag.g_const) * math.sqrt(2.0 * m)) \
        * normT_F / diag.delta_min
    lam = eps * (2.0 * math.sqrt(m * d) * lambda_norm / (diag.gamma * s_m * sw) + 1.0 / s_m) \
        * K * max_normTl_F * kW
    zeta = math.sqrt(m * N) * n * d * lam
    zeta_order = (d ** 1.5 * m ** 1.5 * n * math.sqrt(N)
                  / (diag.gamma * diag.delta_min * s_m * sw)) * normT_F * max_normTl_F * kW * eps
    if lam == 0.0:
        bound_t = 0.0
    elif diag.eta > 0:
        bound_t = lam / (math.pi * diag.eta)
    else:
        bound_t = math.inf
    x = diag.kappa_A * math.sqrt(m) * zeta
    bound_c = 2.0 * x / (1.0 - x) if x < 1.0 else math.inf
    return ErrorBounds(lam=lam, bound_t=bound_t, bound_t_arg=lam / (2.0 * math.pi), zeta=zeta,
                       zeta_order=zeta_order, bound_c=bound_c,
                       t_unbounded=math.isinf(bound_t), c_unbounded=math.isinf(bound_c))


def forward_error_estimate(diag, eps, d, m, n, N, normT_F, max_normTl_F):
    """(bound_t, bound_c); see :func:`error_bounds`."""
    b = error_bounds(diag, eps, d, m, n, N, normT_F, max_normTl_F)
    return b.bound_t, b.bound_c


@dataclass(frozen=True)
class _Ingredients:
    sigma_tilde_m: float
    delta_min: float
    gamma: float
    eta: float
    kappa_W: float
    sigma_min_W: float
    kappa_A: float
    g_const: float


def collect_diagnostics(svd, nodes, eigvals, kappa_A: float, *, eps: float, n: int,
                        normT_F: float, max_normTl_F: float, g_const: float = DEFAULT_G,
                        delta_min: float | None = None, gamma: float | None = None,
                        warnings=()) -> NoiseDiagnostics:
    """Assemble :class:`NoiseDiagnostics` from the pipeline's intermediate results.

    ``delta_min`` and ``gamma`` default to self-gaps of the perturbed
    quantities; passing clean-vs-noisy values switches ``estimate_kind``.
    """
    sigma = np.asarray(svd.sigma, dtype=float)
    m = sigma.size
    d = nodes.z.shape[1]
    N = svd.U.shape[0]
    kind = "self-gap" if delta_min is None and gamma is None else "clean-vs-noisy"
    if delta_min is None:
        tail_first = None
        if svd.tail_sigma is not None and len(svd.tail_sigma):
            tail_first = float(svd.tail_sigma[0])
        delta_min = delta_min_self(sigma, tail_first)
    if gamma is None:
        gamma = gamma_self(eigvals)
    ing = _Ingredients(sigma_tilde_m=float(sigma[-1]), delta_min=float(delta_min),
                       gamma=float(gamma), eta=eta(nodes.z), kappa_W=nodes.kappa_W,
                       sigma_min_W=nodes.sigma_min_W, kappa_A=float(kappa_A),
                       g_const=float(g_const))
    lambda_norm = float(np.max(np.abs(nodes.z)))
    bounds = error_bounds(ing, eps, d, m, n, N, normT_F, max_normTl_F, lambda_norm)
    tail = svd.tail_norm
    return NoiseDiagnostics(
        sigma_tilde_m=ing.sigma_tilde_m, tail_norm=float(tail),
        tail_is_surrogate=svd.tail_is_surrogate, delta_min=ing.delta_min, gamma=ing.gamma,
        eta=ing.eta, kappa_W=ing.kappa_W, sigma_min_W=ing.sigma_min_W, kappa_A=ing.kappa_A,
        g_const=ing.g_const, epsilon=float(eps), norm_T=float(normT_F),
        max_norm_T_ell=float(max_normTl_F),
        rank_check=bool(tail <= max(eps, svd.tol) * normT_F),
        offdiag=tuple(float(x) for x in nodes.offdiag), bounds=bounds, estimate_kind=kind,
        warnings=tuple(warnings))


# accuracy metrics

def torus_distance(a, b) -> np.ndarray:
    """Componentwise min(|a - b|, 1 - |a - b|) for values in [0, 1)."""
    diff = np.abs(np.mod(np.asarray(a, float) - np.asarray(b, float), 1.0))
    return np.minimum(diff, 1.0 - diff)


def align_nodes(t_rec, t_true) -> np.ndarray:
    """Permutation p with t_rec[p[j]] matched to t_true[j].

    Matching minimizes the total squared torus distance; plain lexicographic
    sorting can mis-pair nodes that wrap across 0.
    """
    t_rec = np.asarray(t_rec, float)
    t_true = np.asarray(t_true, float)
    if t_rec.shape != t_true.shape:
        raise InputError(f"node sets differ in shape: {t_rec.shape} vs {t_true.shape}")
    cost = np.sum(torus_distance(t_true[:, None, :], t_rec[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(cost)
    return cols[np.argsort(rows)]


def max_t_error(t_rec, t_true) -> float:
    p = align_nodes(t_rec, t_true)
    return float(np.max(torus_distance(np.asarray(t_rec)[p], t_true)))


def rel_c_error(t_rec, c_rec, t_true, c_true) -> float:
    p = align_nodes(t_rec, t_true)
    c_true = np.asarray(c_true)
    return float(np.linalg.norm(np.asarray(c_rec)[p] - c_true) / np.linalg.norm(c_true))
