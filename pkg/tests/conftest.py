import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pencil_prony.signal_model import NoiseSpec, paper_test_family, sample_grid

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def family_grid(d, m, n, eps=0.0, seed=1):
    sig = paper_test_family(d, m)
    return sig, sample_grid(sig, n, NoiseSpec(eps, seed))


@pytest.fixture(scope="session")
def d3_n14_runs():
    """Pipeline runs at d=3, n=14 shared by the timing tests.

    Power runs alternate between lane modes so drift affects both equally.
    """
    from pencil_prony.pipeline import PipelineConfig, run_prony

    sig = paper_test_family(3, 5)
    grid = sample_grid(sig, 14)

    def cfg(backend, mode):
        return PipelineConfig(n=14, d=3, m_expected=5, svd_backend=backend, lane_mode=mode)

    run_prony(grid, cfg("power", "parallel"))  # warmup
    power = {"sequential": [], "parallel": []}
    for _ in range(5):
        for mode in power:
            power[mode].append(run_prony(grid, cfg("power", mode)))
    out = {"signal": sig}
    for mode, reports in power.items():
        reports.sort(key=lambda r: r.timings.t_total)
        out[f"power-{mode}"] = reports[len(reports) // 2]
        out[f"power-{mode}-totals"] = [r.timings.t_total for r in reports]
    out["dense-parallel"] = run_prony(grid, cfg("dense", "parallel"))
    return out
