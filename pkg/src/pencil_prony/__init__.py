"""Recovery of sparse multivariate exponential sums by the matrix-pencil method."""

__version__ = "0.1.0"

from .errors import (CapacityError, ConvergenceError, DomainError, EmptyModelError, InputError,
                     PronyError, RankDeficiencyError, RankOverflowError, SingularBasisError,
                     SingularScaleError)
from .pipeline import PipelineConfig, RecoveryReport, run_prony
from .reduced_svd import RankCriterion
from .signal_model import ExponentialSum, NoiseSpec, SampleGrid, paper_test_family, sample_grid

__all__ = [
    "__version__",
    "CapacityError", "ConvergenceError", "DomainError", "EmptyModelError", "InputError",
    "PronyError", "RankDeficiencyError", "RankOverflowError", "SingularBasisError",
    "SingularScaleError",
    "ExponentialSum", "NoiseSpec", "SampleGrid", "paper_test_family", "sample_grid",
    "PipelineConfig", "RecoveryReport", "RankCriterion", "run_prony",
]
