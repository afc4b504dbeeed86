"""l^p kernel-embedding tests for conditional and unconditional independence."""

from .ci_test import (
    LocationSet,
    TestConfig,
    TestResult,
    WitnessSample,
    nci_statistic,
    prepare,
    run_oracle_test,
    run_test,
    sample_locations,
    witness_terms,
)
from .ind_test import nui_statistic, run_independence_test
from .kernels import KernelSpec, median_heuristic
from .synthetic import ScenarioSpec, generate

__all__ = [
    "KernelSpec",
    "LocationSet",
    "ScenarioSpec",
    "TestConfig",
    "TestResult",
    "WitnessSample",
    "generate",
    "median_heuristic",
    "nci_statistic",
    "nui_statistic",
    "prepare",
    "run_independence_test",
    "run_oracle_test",
    "run_test",
    "sample_locations",
    "witness_terms",
]

__version__ = "0.1.0"
