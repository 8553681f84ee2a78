"""Assembly of the sample matrices T, T_l, B_mu and the sample vector f.

Rows and columns are indexed by I_n = {0, ..., n}^d in lexicographic order
(last coordinate fastest).  Entries are pure lookups into the precomputed
:class:`~pencil_prony.signal_model.SampleGrid`: the flattened box offset of
``k - h + s`` is linear in k and h, so a whole block column is a single gather.

Large problems can use :class:`ShiftedSampleOperator` instead of a dense
matrix.  It produces the same entries block column by block column and only
ever holds one block in memory.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, InputError
from .signal_model import SampleGrid

__all__ = [
    "IndexSet",
    "index_set",
    "build_T",
    "build_T_ell",
    "build_f_vector",
    "build_B_mu",
    "ShiftedSampleOperator",
    "CombinedOperator",
    "sample_operator",
    "save_matrix",
    "load_matrix",
    "REDUCTION_CHUNK",
]

# Column-chunk width for streamed products. Fixed so that the summation tree of
# a streamed product never depends on the worker count.
REDUCTION_CHUNK = 512
_MAX_GATHER = 1 << 22  # gathered entries per chunk when materialising


@dataclass(frozen=True)
class IndexSet:
    """The ordered index set I_n = {0, ..., n}^d."""

    n: int
    d: int
    order: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.order.shape[0]

    def position(self, k) -> int:
        """Row/column number of lattice point ``k``."""
        k = np.asarray(k, dtype=np.int64).reshape(-1)
        if k.shape[0] != self.d or np.any(k < 0) or np.any(k > self.n):
            raise InputError(f"{k.tolist()} is not in I_n")
        pos = 0
        for ki in k:
            pos = pos * (self.n + 1) + int(ki)
        return pos


def index_set(n: int, d: int) -> IndexSet:
    if n < 1 or d < 1:
        raise InputError("n and d must be >= 1")
    N = (n + 1) ** d
    # an N x N complex128 matrix must be addressable
    if N * N > np.iinfo(np.intp).max // 16:
        raise CapacityError(f"(n+1)^d = {N} is too large to address N x N matrices")
    axes = [np.arange(n + 1, dtype=np.int64)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    order = np.stack([g.reshape(-1) for g in mesh], axis=1)
    order.setflags(write=False)
    return IndexSet(n=n, d=d, order=order)


def _check_pair(grid: SampleGrid, idx: IndexSet):
    if grid.d != idx.d:
        raise InputError(f"grid dimension {grid.d} != index-set dimension {idx.d}")
    if grid.n < idx.n:
        raise InputError(f"grid covers n={grid.n}, index set needs n={idx.n}")


def _column_blocks(N: int, workers: int):
    width = -(-N // max(1, workers))
    return [(a, min(a + width, N)) for a in range(0, N, width)]


class ShiftedSampleOperator:
    """The N x N matrix [f(k - h + s)]_{k, h in I_n} for a fixed shift s.

    s = 0 gives T and s = e_l gives T_l.  Entries are gathered from the grid
    on demand, one block column at a time.
    """

    def __init__(self, grid: SampleGrid, idx: IndexSet, shift=None):
        _check_pair(grid, idx)
        shift = np.zeros(idx.d, dtype=np.int64) if shift is None else np.asarray(shift, np.int64)
        if shift.shape != (idx.d,):
            raise InputError("shift must have one entry per dimension")
        lo, hi = -idx.n + shift, idx.n + shift
        if np.any(lo < -grid.n) or np.any(hi > grid.n + 1):
            raise InputError("grid does not cover the shifted difference box")
        self.grid = grid
        self.idx = idx
        self.shift = shift
        strides = grid.strides
        self._lin = idx.order @ strides
        self._base = int((shift + grid.n) @ strides)
        self._flat = grid.flat

    @property
    def shape(self):
        return (self.idx.N, self.idx.N)

    @property
    def dtype(self):
        return np.dtype(complex)

    def columns(self, start: int, stop: int) -> np.ndarray:
        """Dense block of columns ``start:stop``."""
        offsets = self._lin[:, None] - self._lin[None, start:stop] + self._base
        return self._flat[offsets]

    def fill(self, out: np.ndarray, start: int, stop: int) -> None:
        step = max(1, _MAX_GATHER // self.idx.N)
        for a in range(start, stop, step):
            b = min(a + step, stop)
            out[:, a:b] = self.columns(a, b)

    def to_dense(self, workers: int = 1) -> np.ndarray:
        N = self.idx.N
        out = np.empty((N, N), dtype=complex)
        blocks = _column_blocks(N, workers)
        if workers <= 1:
            for a, b in blocks:
                self.fill(out, a, b)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda ab: self.fill(out, *ab), blocks))
        return out

    def matmat(self, X: np.ndarray, workers: int = 1) -> np.ndarray:
        """Product with an N x r matrix, streaming fixed-width column chunks."""
        return _streamed_matmat(self.columns, self.idx.N, X, workers)

    def frobenius_norm(self) -> float:
        """Exact Frobenius norm from the grid, without forming the matrix.

        Entry f(delta + s) appears once for every pair (k, h) with
        k - h = delta, i.e. prod_i (n + 1 - |delta_i|) times.
        """
        n, d = self.idx.n, self.idx.d
        axes = [np.arange(-n, n + 1)] * d
        mult = np.ones((2 * n + 1,) * d)
        for i, ax in enumerate(axes):
            shape = [1] * d
            shape[i] = 2 * n + 1
            mult = mult * (n + 1 - np.abs(ax)).reshape(shape)
        sl = tuple(slice(self.grid.n - n + s, self.grid.n + n + 1 + s) for s in self.shift)
        vals = self.grid.values[sl]
        return float(np.sqrt(np.sum(mult * np.abs(vals) ** 2)))


class CombinedOperator:
    """Streamed B_mu = sum_l mu_l T_l, assembled block column by block column."""

    def __init__(self, operators, mu):
        operators = list(operators)
        mu = np.asarray(mu, dtype=complex).reshape(-1)
        if not operators or len(operators) != mu.shape[0]:
            raise InputError("need one coefficient per operator")
        if len({op.shape for op in operators}) != 1:
            raise InputError("operators must share one shape")
        self.operators = operators
        self.mu = mu

    @property
    def shape(self):
        return self.operators[0].shape

    @property
    def dtype(self):
        return np.dtype(complex)

    def columns(self, start: int, stop: int) -> np.ndarray:
        out = self.mu[0] * self.operators[0].columns(start, stop)
        for coef, op in zip(self.mu[1:], self.operators[1:]):
            out += coef * op.columns(start, stop)
        return out

    def to_dense(self, workers: int = 1) -> np.ndarray:
        N = self.shape[1]
        out = np.empty(self.shape, dtype=complex)
        for a in range(0, N, REDUCTION_CHUNK):
            b = min(a + REDUCTION_CHUNK, N)
            out[:, a:b] = self.columns(a, b)
        return out

    def matmat(self, X: np.ndarray, workers: int = 1) -> np.ndarray:
        return _streamed_matmat(self.columns, self.shape[1], X, workers)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.to_dense()))


def _streamed_matmat(columns, N: int, X: np.ndarray, workers: int) -> np.ndarray:
    X = np.asarray(X)
    if X.shape[0] != N:
        raise InputError(f"cannot multiply N={N} operator by {X.shape[0]}-row matrix")
    chunks = [(a, min(a + REDUCTION_CHUNK, N)) for a in range(0, N, REDUCTION_CHUNK)]

    def partial(ab):
        a, b = ab
        return columns(a, b) @ X[a:b]

    if workers <= 1:
        parts = map(partial, chunks)
        total = None
        for p in parts:
            total = p if total is None else total + p
        return total
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(partial, chunks))
    # fixed left-to-right fold: identical to the serial path
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def sample_operator(grid: SampleGrid, idx: IndexSet, ell: int | None = None) -> ShiftedSampleOperator:
    """Streamed T (``ell=None``) or T_ell (``ell`` in 1..d)."""
    if ell is None:
        return ShiftedSampleOperator(grid, idx)
    if not 1 <= ell <= idx.d:
        raise InputError(f"ell must be in 1..{idx.d}, got {ell}")
    shift = np.zeros(idx.d, dtype=np.int64)
    shift[ell - 1] = 1
    return ShiftedSampleOperator(grid, idx, shift)


def build_T(grid: SampleGrid, idx: IndexSet, workers: int = 1) -> np.ndarray:
    """T[row(k), col(h)] = f(k - h), assembled over uniform block columns."""
    return sample_operator(grid, idx).to_dense(workers)


def build_T_ell(grid: SampleGrid, idx: IndexSet, ell: int, workers: int = 1) -> np.ndarray:
    """T_ell[row(k), col(h)] = f(k - h + e_ell)."""
    return sample_operator(grid, idx, ell).to_dense(workers)


def build_f_vector(grid: SampleGrid, idx: IndexSet) -> np.ndarray:
    _check_pair(grid, idx)
    return grid.flat[idx.order @ grid.strides + int(grid.n * grid.strides.sum())].copy()


def build_B_mu(T_ells, mu, workers: int = 1) -> np.ndarray:
    """Entrywise sum_l mu_l T_l, accumulated in fixed l order."""
    T_ells = [np.asarray(T) for T in T_ells]
    mu = np.asarray(mu, dtype=complex).reshape(-1)
    if not T_ells or len(T_ells) != mu.shape[0]:
        raise InputError(f"{len(T_ells)} matrices but {mu.shape[0]} weights")
    shape = T_ells[0].shape
    if any(T.shape != shape for T in T_ells):
        raise InputError("all T_l must have the same shape")
    out = np.empty(shape, dtype=complex)

    def fill(ab):
        a, b = ab
        blk = mu[0] * T_ells[0][:, a:b]
        for coef, T in zip(mu[1:], T_ells[1:]):
            blk += coef * T[:, a:b]
        out[:, a:b] = blk

    blocks = _column_blocks(shape[1], workers)
    if workers <= 1:
        for ab in blocks:
            fill(ab)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, blocks))
    return out


def save_matrix(A: np.ndarray, path) -> None:
    """Debug dump: one JSON header line {rows, cols}, then row-major complex128."""
    A = np.asarray(A, dtype=complex)
    with Path(path).open("wb") as fh:
        fh.write((json.dumps({"rows": A.shape[0], "cols": A.shape[1]}) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(A, dtype="<c16").tobytes())


def load_matrix(path) -> np.ndarray:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        data = np.frombuffer(fh.read(), dtype="<c16").astype(complex)
    return data.reshape(header["rows"], header["cols"])
