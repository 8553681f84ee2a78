"""End-to-end recovery as a two-lane task graph.

Lane A carries the factorizations (SVD, eigendecomposition, least squares);
lane B carries the bulk matrix work (T_l, B_mu, all S_l, diagonalization,
the node matrix A).  Results cross lanes only through task outputs:

    lane A:  T, f ─ svd ───────── C_mu ─ eig ──────────── ls
                     │             │      │                │
    lane B:  T_l ─ B_mu ───────────┘      │                │
                     └──── S ─────────── diag ─ z,t ─ A ───┘

``lane_mode="parallel"`` runs each lane on its own thread; ``"sequential"``
runs the same tasks in the same topological order on one thread.  Both
modes evaluate the identical arithmetic, so their outputs agree exactly.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import assembly, coefficients, diagnostics, pencil
from .errors import ConvergenceError, EmptyModelError, InputError, RankOverflowError
from .reduced_svd import RankCriterion, reduced_svd
from .signal_model import SampleGrid

__all__ = [
    "PipelineConfig",
    "StageTimings",
    "RecoveryReport",
    "TaskGraph",
    "run_prony",
    "stage_timings",
    "TIMING_COLUMNS",
    "DEPENDENCIES",
]

LANES = ("A", "B")
LANE_MODES = ("sequential", "parallel")
# dense T_l and B_mu are kept when T plus d + 1 more N x N matrices fit here
MATERIALIZE_BYTES = 2 << 30

TIMING_COLUMNS = ("t_T", "t_SVD", "t_S", "t_Cmu", "t_eig", "t_zt", "t_A", "t_LS", "t_total")

# task -> (lane, dependencies, timing column)
DEPENDENCIES = {
    "T": ("A", (), "t_T"),
    "f": ("A", (), "t_T"),
    "T_ell": ("B", (), "t_T"),
    "svd": ("A", ("T",), "t_SVD"),
    "B_mu": ("B", ("T_ell",), "t_Cmu"),
    "S": ("B", ("svd", "T_ell"), "t_S"),
    "C_mu": ("A", ("svd", "B_mu"), "t_Cmu"),
    "eig": ("A", ("C_mu",), "t_eig"),
    "diag": ("B", ("eig", "S"), "t_zt"),
    "A": ("B", ("diag",), "t_A"),
    "ls": ("A", ("A", "f"), "t_LS"),
}
ORDER = ("T", "f", "T_ell", "svd", "B_mu", "S", "C_mu", "eig", "diag", "A", "ls")


@dataclass(frozen=True)
class PipelineConfig:
    """Recovery settings.

    ``svd_backend=None`` picks the block power method with r0 = 2 m_expected
    when ``m_expected`` is known and Lanczos otherwise.  ``materialize=None``
    keeps T_l and B_mu dense when they fit in :data:`MATERIALIZE_BYTES` and
    streams them otherwise.  ``noise_level=None`` takes the grid's epsilon.
    """

    n: int
    d: int
    m_expected: int | None = None
    svd_backend: str | None = None
    rank_criterion: RankCriterion = field(default_factory=RankCriterion.machine)
    seed: int = 0
    workers: int = 1
    lane_mode: str = "parallel"
    materialize: bool | None = None
    noise_level: float | None = None
    g_const: float = diagnostics.DEFAULT_G
    power_r0: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InputError("n and d must be >= 1")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        if self.lane_mode not in LANE_MODES:
            raise InputError(f"lane_mode must be one of {LANE_MODES}")
        if self.m_expected is not None and self.m_expected < 1:
            raise InputError("m_expected must be >= 1")
        if self.svd_backend not in (None, "dense", "lanczos", "power"):
            raise InputError(f"unknown SVD backend {self.svd_backend!r}")

    @property
    def backend(self) -> str:
        if self.svd_backend is not None:
            return self.svd_backend
        return "power" if self.m_expected is not None else "lanczos"

    @property
    def r0(self) -> int | None:
        if self.power_r0 is not None:
            return self.power_r0
        return 2 * self.m_expected if self.m_expected is not None else None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rank_criterion"] = {"mode": self.rank_criterion.mode, "tol": self.rank_criterion.tol}
        return out


@dataclass(frozen=True)
class StageTimings:
    """Wall time per stage in seconds; t_T covers T, all T_l and f."""

    t_T: float = 0.0
    t_SVD: float = 0.0
    t_S: float = 0.0
    t_Cmu: float = 0.0
    t_eig: float = 0.0
    t_zt: float = 0.0
    t_A: float = 0.0
    t_LS: float = 0.0
    t_total: float = 0.0

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in TIMING_COLUMNS)

    def stage_sum(self) -> float:
        return float(sum(self.row()[:-1]))


@dataclass
class RecoveryReport:
    t_recovered: np.ndarray
    c_recovered: np.ndarray
    residual_rel: float
    diagnostics: diagnostics.NoiseDiagnostics
    timings: StageTimings
    rank_detected: int
    rank_anomaly: bool
    m_expected: int | None
    backend: str
    mu: np.ndarray
    mu_redraws: int
    singular_values: np.ndarray
    svd_iterations: int
    power_r0: int | None
    materialized: bool
    eigvals: np.ndarray | None = None
    warnings: tuple = ()
    config: dict = field(default_factory=dict)
    events: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "rank_detected": self.rank_detected,
            "rank_anomaly": self.rank_anomaly,
            "m_expected": self.m_expected,
            "t_recovered": self.t_recovered.tolist(),
            "c_recovered": [[float(c.real), float(c.imag)] for c in self.c_recovered],
            "residual_rel": self.residual_rel,
            "singular_values": self.singular_values.tolist(),
            "backend": self.backend,
            "svd_iterations": self.svd_iterations,
            "power_r0": self.power_r0,
            "materialized": self.materialized,
            "mu": [[float(x.real), float(x.imag)] for x in self.mu],
            "mu_redraws": self.mu_redraws,
            "eigvals": None if self.eigvals is None else
            [[float(x.real), float(x.imag)] for x in self.eigvals],
            "timings": dict(zip(TIMING_COLUMNS, self.timings.row())),
            "diagnostics": self.diagnostics.to_dict() if self.diagnostics is not None else None,
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class TaskGraph:
    """Runs named tasks on two lanes in a fixed topological order.

    Every task start and end is stamped from one shared counter, so
    :meth:`violations` can check after the fact that no task started before
    all of its dependencies had finished.
    """

    def __init__(self, mode: str = "parallel"):
        if mode not in LANE_MODES:
            raise InputError(f"lane_mode must be one of {LANE_MODES}")
        self.mode = mode
        self._tasks = []
        self._lock = threading.Lock()
        self._clock = 0
        self.events = []
        self.durations = {}

    def add(self, name, lane, deps, fn):
        if lane not in LANES:
            raise InputError(f"unknown lane {lane!r}")
        known = {t[0] for t in self._tasks}
        missing = [d for d in deps if d not in known]
        if missing:
            raise InputError(f"task {name!r} added before its dependencies {missing}")
        self._tasks.append((name, lane, tuple(deps), fn))

    def _stamp(self, kind, name, lane):
        with self._lock:
            self._clock += 1
            self.events.append((self._clock, kind, name, lane))

    def _execute(self, name, lane, fn, inputs):
        self._stamp("start", name, lane)
        t0 = time.perf_counter()
        try:
            return fn(*inputs)
        finally:
            self.durations[name] = time.perf_counter() - t0
            self._stamp("end", name, lane)

    def run(self) -> dict:
        if self.mode == "sequential":
            results = {}
            for name, lane, deps, fn in self._tasks:
                results[name] = self._execute(name, lane, fn, [results[d] for d in deps])
            return results
        futures: dict[str, Future] = {}
        pools = {lane: ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"lane-{lane}")
                 for lane in LANES}
        try:
            for name, lane, deps, fn in self._tasks:
                dep_futures = [futures[d] for d in deps]

                def job(name=name, lane=lane, fn=fn, dep_futures=dep_futures):
                    inputs = [f.result() for f in dep_futures]
                    return self._execute(name, lane, fn, inputs)

                futures[name] = pools[lane].submit(job)
            return {name: fut.result() for name, fut in futures.items()}
        finally:
            for pool in pools.values():
                # a failed task must not leave the other lane blocked on it
                for fut in futures.values():
                    fut.cancel()
                pool.shutdown(wait=True)

    def violations(self) -> list:
        """(task, dependency) pairs where the task started before the dependency ended."""
        start = {n: c for c, k, n, _ in self.events if k == "start"}
        end = {n: c for c, k, n, _ in self.events if k == "end"}
        bad = []
        for name, _, deps, _ in self._tasks:
            for dep in deps:
                if name in start and not (dep in end and end[dep] < start[name]):
                    bad.append((name, dep))
        return bad


def _should_materialize(config: PipelineConfig, N: int) -> bool:
    if config.materialize is not None:
        return bool(config.materialize)
    return (config.d + 2) * N * N * 16 <= MATERIALIZE_BYTES


def _svd_with_retry(T, config: PipelineConfig, warnings: list):
    backend = config.backend
    if backend != "power":
        return reduced_svd(T, backend, config.rank_criterion, seed=config.seed,
                           expected_rank=config.m_expected), None
    r0 = config.r0
    if r0 is None:
        raise InputError("the power backend needs m_expected or power_r0")
    try:
        return reduced_svd(T, "power", config.rank_criterion, seed=config.seed, r0=r0), r0
    except RankOverflowError:
        warnings.append(f"no singular-value drop within r0={r0}; retried with r0={2 * r0}")
        r0 *= 2
        return reduced_svd(T, "power", config.rank_criterion, seed=config.seed, r0=r0), r0


def run_prony(grid: SampleGrid, config: PipelineConfig, graph: TaskGraph | None = None
              ) -> RecoveryReport:
    """Recover (t, c) from the samples in ``grid``.

    Raises
    ------
    EmptyModelError
        If the detected numerical rank is zero.
    ConvergenceError, RankOverflowError, RankDeficiencyError, SingularBasisError
        Propagated from the stages.
    """
    if grid.d != config.d or grid.n < config.n:
        raise InputError(f"grid (d={grid.d}, n={grid.n}) does not cover config "
                         f"(d={config.d}, n={config.n})")
    t_start = time.perf_counter()
    idx = assembly.index_set(config.n, config.d)
    dense = _should_materialize(config, idx.N)
    workers = config.workers
    d = config.d
    warnings: list = []
    eps = grid.epsilon if config.noise_level is None else config.noise_level
    mu0 = pencil.random_mu(d, config.seed)
    state = {"mu": mu0, "redraws": 0}

    def task_T():
        return assembly.build_T(grid, idx, workers)

    def task_f():
        return assembly.build_f_vector(grid, idx)

    def task_T_ell():
        ops = [assembly.sample_operator(grid, idx, ell) for ell in range(1, d + 1)]
        if dense:
            return [op.to_dense(workers) for op in ops], [op.frobenius_norm() for op in ops]
        return ops, [op.frobenius_norm() for op in ops]

    def task_svd(T):
        svd, r0 = _svd_with_retry(T, config, warnings)
        if svd.rank < 1:
            raise EmptyModelError("numerical rank of T is zero; nothing to recover")
        return svd, r0, float(np.linalg.norm(T))

    def task_B_mu(T_ell):
        mats, _ = T_ell
        if dense:
            return assembly.build_B_mu(mats, mu0, workers)
        return assembly.CombinedOperator(mats, mu0)

    def task_S(svd_out, T_ell):
        svd = svd_out[0]
        return [pencil.compute_S(svd, T, workers) for T in T_ell[0]]

    def task_C_mu(svd_out, B):
        return pencil.compute_C_mu(svd_out[0], B, workers)

    def task_eig(C):
        try:
            W, lam = pencil.eigendecompose(C)
            if not pencil.eigenvalue_collision(lam, np.linalg.norm(C)):
                return C, W, lam
            reason = "eigenvalue collision"
        except ConvergenceError as exc:
            reason = str(exc)
        # redraw once: C_mu' = sum_l mu'_l S_l needs the S_l from lane B
        S = s_future()
        mu = pencil.random_mu(d, (config.seed, 1))
        state["mu"], state["redraws"] = mu, 1
        warnings.append(f"mu redrawn after {reason}")
        C = pencil.combine(S, mu)
        W, lam = pencil.eigendecompose(C)
        return C, W, lam

    def task_diag(eig_out, S):
        C, W, lam = eig_out
        ps = pencil.PencilSet(S=tuple(S), mu=state["mu"], C_mu=C, W=W, eigvals=lam)
        return pencil.simultaneous_diagonalize(ps)

    def task_A(nodes):
        return coefficients.build_A(nodes.z, idx)

    def task_ls(A, f):
        return coefficients.solve_ls(A, f)

    graph = graph or TaskGraph(config.lane_mode)
    fns = {"T": task_T, "f": task_f, "T_ell": task_T_ell, "svd": task_svd, "B_mu": task_B_mu,
           "S": task_S, "C_mu": task_C_mu, "eig": task_eig, "diag": task_diag, "A": task_A,
           "ls": task_ls}
    s_holder = {}

    def s_future():
        return s_holder["get"]()

    if graph.mode == "sequential":
        # S precedes eig in ORDER, so its value exists if eig needs a redraw
        s_holder["get"] = lambda: s_holder["value"]
        orig_S = fns["S"]

        def task_S_seq(*args):
            s_holder["value"] = orig_S(*args)
            return s_holder["value"]

        fns["S"] = task_S_seq
    else:
        ready = threading.Event()
        orig_S = fns["S"]

        def task_S_par(*args):
            try:
                s_holder["value"] = orig_S(*args)
                return s_holder["value"]
            except BaseException as exc:
                s_holder["error"] = exc
                raise
            finally:
                ready.set()

        def get_S():
            ready.wait()
            if "error" in s_holder:
                raise s_holder["error"]
            return s_holder["value"]

        s_holder["get"] = get_S
        fns["S"] = task_S_par

    for name in ORDER:
        lane, deps, _ = DEPENDENCIES[name]
        graph.add(name, lane, deps, fns[name])
    res = graph.run()
    t_total = time.perf_counter() - t_start

    svd, r0, normT = res["svd"]
    nodes = res["diag"]
    ls = res["ls"]
    _, norms_ell = res["T_ell"]
    C, W, lam = res["eig"]
    warnings.extend(nodes.warnings)
    rank = svd.rank
    anomaly = config.m_expected is not None and rank != config.m_expected
    if anomaly:
        warnings.append(f"detected rank {rank} differs from expected {config.m_expected}")
    diag = diagnostics.collect_diagnostics(
        svd, nodes, lam, ls.cond_A, eps=eps, n=config.n, normT_F=normT,
        max_normTl_F=max(norms_ell), g_const=config.g_const, warnings=tuple(warnings))

    order = np.lexsort(nodes.t.T[::-1])
    per_column = {c: 0.0 for c in TIMING_COLUMNS}
    for name, dur in graph.durations.items():
        per_column[DEPENDENCIES[name][2]] += dur
    per_column["t_total"] = t_total
    return RecoveryReport(
        t_recovered=nodes.t[order], c_recovered=ls.c[order], residual_rel=ls.residual_rel,
        diagnostics=diag, timings=StageTimings(**per_column), rank_detected=rank,
        rank_anomaly=anomaly, m_expected=config.m_expected, backend=svd.backend,
        mu=state["mu"], mu_redraws=state["redraws"], singular_values=svd.sigma,
        svd_iterations=svd.iterations, power_r0=r0, materialized=dense, eigvals=lam,
        warnings=tuple(warnings), config=config.to_dict(), events=list(graph.events))


def stage_timings(report: RecoveryReport) -> tuple:
    """The nine stage times in column order (see :data:`TIMING_COLUMNS`)."""
    return report.timings.row()
