"""Sparse multivariate exponential sums, their grid samples, and noise.

A signal is

    f(k) = sum_j c_j exp(-2 pi i <t_j, k>),   k in Z^d,

with pairwise distinct frequency vectors t_j in [0, 1)^d and nonzero complex
coefficients c_j.  Samples are taken on the integer box {-n, ..., n+1}^d, which
is exactly the support needed to assemble the shifted sample matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = [
    "ExponentialSum",
    "NoiseSpec",
    "SampleGrid",
    "evaluate",
    "evaluate_many",
    "sample_grid",
    "paper_test_family",
    "save_signal",
    "load_signal",
    "save_grid",
    "load_grid",
]

_GRID_FORMAT = "prony-grid"
_GRID_VERSION = 1


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExponentialSum:
    """Ground-truth or recovered exponential sum.

    Parameters
    ----------
    t : array_like, shape (m, d)
        Frequency vectors, each component in [0, 1).
    c : array_like, shape (m,)
        Nonzero complex coefficients.
    """

    t: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim == 1:
            t = t[:, None]
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
            raise InputError(f"t must have shape (m, d) with m, d >= 1, got {t.shape}")
        if c.shape[0] != t.shape[0]:
            raise InputError(f"{t.shape[0]} frequency vectors but {c.shape[0]} coefficients")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(c))):
            raise InputError("t and c must be finite")
        if np.any((t < 0.0) | (t >= 1.0)):
            raise InputError("every component of t must lie in [0, 1)")
        if np.any(c == 0):
            raise InputError("coefficients must be nonzero")
        if len({tuple(row) for row in t.tolist()}) != t.shape[0]:
            raise InputError("frequency vectors must be pairwise distinct")
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "c", _frozen(c))

    @property
    def d(self) -> int:
        return self.t.shape[1]

    @property
    def m(self) -> int:
        return self.t.shape[0]

    @property
    def z(self) -> np.ndarray:
        """Nodes exp(-2 pi i t_j), shape (m, d)."""
        return np.exp(-2j * np.pi * self.t)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "t": self.t.tolist(),
            "c": [[float(v.real), float(v.imag)] for v in self.c],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExponentialSum":
        t = np.asarray(data["t"], dtype=float)
        c = np.asarray(data["c"], dtype=float)
        if c.ndim != 2 or c.shape[1] != 2:
            raise InputError("coefficients must be stored as [[re, im], ...]")
        out = cls(t=t, c=c[:, 0] + 1j * c[:, 1])
        if "d" in data and data["d"] != out.d or "m" in data and data["m"] != out.m:
            raise InputError("header d/m disagree with the stored arrays")
        return out


@dataclass(frozen=True)
class NoiseSpec:
    """Relative noise bound ``epsilon`` and the seed that fixes the draw."""

    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.epsilon >= 0.0 and math.isfinite(self.epsilon)):
            raise InputError(f"epsilon must be finite and >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class SampleGrid:
    """Samples over the box {-n, ..., n+1}^d.

    ``values[k + n]`` holds the sample at lattice point ``k`` (componentwise
    offset), so the array has shape ``(2n+2,) * d`` and its row-major flattening
    enumerates the box in lexicographic order with the last coordinate fastest.
    """

    n: int
    d: int
    values: np.ndarray = field(repr=False)
    epsilon: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InputError("n and d must be >= 1")
        v = np.asarray(self.values, dtype=complex)
        side = 2 * self.n + 2
        if v.shape != (side,) * self.d:
            raise InputError(f"values must have shape {(side,) * self.d}, got {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def side(self) -> int:
        return 2 * self.n + 2

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @property
    def strides(self) -> np.ndarray:
        """Element strides of the flattened box, one per coordinate."""
        return np.array([self.side ** (self.d - 1 - i) for i in range(self.d)], dtype=np.int64)

    def at(self, k) -> complex:
        k = np.asarray(k, dtype=np.int64).reshape(-1)
        if k.shape[0] != self.d:
            raise InputError(f"index has length {k.shape[0]}, grid dimension is {self.d}")
        if np.any(k < -self.n) or np.any(k > self.n + 1):
            raise InputError(f"index {k.tolist()} outside the sampled box")
        return complex(self.values[tuple(k + self.n)])

    def box_points(self) -> np.ndarray:
        """All lattice points of the box, lexicographic, shape ((2n+2)^d, d)."""
        return _box(self.n, self.d)


def _box(n: int, d: int) -> np.ndarray:
    axes = [np.arange(-n, n + 2, dtype=np.int64)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def _check_points(sig: ExponentialSum, k) -> np.ndarray:
    k = np.asarray(k)
    if k.ndim == 0:
        k = k.reshape(1)
    if k.shape[-1] != sig.d:
        raise InputError(f"index length {k.shape[-1]} does not match signal dimension {sig.d}")
    if not np.issubdtype(k.dtype, np.integer):
        if not np.all(np.equal(np.mod(k, 1), 0)):
            raise InputError("sample locations must be integer vectors")
        k = k.astype(np.int64)
    return k


def evaluate_many(sig: ExponentialSum, k) -> np.ndarray:
    """Vectorised :func:`evaluate` over an array of points with trailing axis d."""
    k = _check_points(sig, k).astype(float)
    # fixed-order elementwise sums rather than BLAS products, so a point's
    # value does not depend on the batch it is evaluated in
    phase = k[..., None, 0] * sig.t[:, 0]
    for i in range(1, sig.d):
        phase = phase + k[..., None, i] * sig.t[:, i]
    terms = np.exp(-2j * np.pi * np.mod(phase, 1.0))
    out = terms[..., 0] * sig.c[0]
    for j in range(1, sig.m):
        out = out + terms[..., j] * sig.c[j]
    return out


def evaluate(sig: ExponentialSum, k) -> complex:
    """Value of the exponential sum at one integer point ``k``.

    Each inner product <t_j, k> is reduced modulo 1 before exponentiation.
    """
    k = _check_points(sig, k)
    if k.ndim != 1:
        raise InputError("evaluate takes a single point; use evaluate_many for batches")
    return complex(evaluate_many(sig, k[None, :])[0])


def _relative_perturbation(noise: NoiseSpec, shape) -> np.ndarray:
    # One Philox stream per seed, consumed in lexicographic box order: the draw
    # for a given box position never depends on thread count or call order.
    rng = np.random.Generator(np.random.Philox(key=noise.seed))
    size = int(np.prod(shape))
    radius = rng.uniform(0.0, noise.epsilon, size)
    angle = rng.uniform(0.0, 2.0 * np.pi, size)
    return (radius * np.exp(1j * angle)).reshape(shape)


def sample_grid(sig: ExponentialSum, n: int, noise: NoiseSpec | None = None) -> SampleGrid:
    """Sample ``sig`` on {-n, ..., n+1}^d, optionally with relative noise.

    Returns f(k)(1 + delta_k) with |delta_k| <= epsilon; delta_k is drawn
    uniformly in radius and angle from a Philox stream keyed on ``noise.seed``.
    With epsilon = 0 the samples are exact evaluations.
    """
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n}")
    n = int(n)
    noise = noise or NoiseSpec()
    shape = (2 * n + 2,) * sig.d
    values = evaluate_many(sig, _box(n, sig.d)).reshape(shape)
    if noise.epsilon > 0.0:
        values = values * (1.0 + _relative_perturbation(noise, shape))
    return SampleGrid(n=n, d=sig.d, values=values, epsilon=noise.epsilon)


def paper_test_family(d: int, m: int) -> ExponentialSum:
    """The benchmark family t_j(i) = ((i-1) m + j - 1) 10^-ceil(log10(dm)), c_j = j(1+i)."""
    if d < 1 or m < 1:
        raise InputError("d and m must be >= 1")
    scale = 10.0 ** (-math.ceil(math.log10(d * m)))
    i = np.arange(d)[None, :]
    j = np.arange(m)[:, None]
    t = (i * m + j) * scale
    c = np.arange(1, m + 1) * (1.0 + 1.0j)
    return ExponentialSum(t=t, c=c)


def save_signal(sig: ExponentialSum, path, meta: dict | None = None) -> None:
    data = sig.to_dict()
    if meta:
        data["meta"] = meta
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def load_signal(path) -> ExponentialSum:
    return ExponentialSum.from_dict(json.loads(Path(path).read_text()))


def save_grid(grid: SampleGrid, path, meta: dict | None = None) -> None:
    """Write a grid as JSON (``.json``) or as a JSON header line plus raw complex128.

    Both layouts store the box values row-major in lexicographic k order.
    ``meta`` is stored in the header and ignored on load.
    """
    path = Path(path)
    header = {"format": _GRID_FORMAT, "version": _GRID_VERSION, "d": grid.d, "n": grid.n,
              "epsilon": grid.epsilon}
    if meta:
        header["meta"] = meta
    if path.suffix == ".json":
        flat = grid.flat
        header["values"] = np.stack([flat.real, flat.imag], axis=1).tolist()
        path.write_text(json.dumps(header) + "\n")
        return
    with path.open("wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(grid.flat, dtype="<c16").tobytes())


def load_grid(path) -> SampleGrid:
    path = Path(path)
    if path.suffix == ".json":
        header = json.loads(path.read_text())
        raw = np.asarray(header.pop("values"), dtype=float)
        flat = raw[:, 0] + 1j * raw[:, 1]
    else:
        with path.open("rb") as fh:
            header = json.loads(fh.readline().decode("ascii"))
            flat = np.frombuffer(fh.read(), dtype="<c16").astype(complex)
    if header.get("format") != _GRID_FORMAT:
        raise InputError(f"{path} is not a sample-grid dump")
    d, n = int(header["d"]), int(header["n"])
    side = 2 * n + 2
    if flat.size != side ** d:
        raise InputError(f"{path}: expected {side ** d} values, found {flat.size}")
    return SampleGrid(n=n, d=d, values=flat.reshape((side,) * d),
                      epsilon=float(header.get("epsilon", 0.0)))
