"""Extended cross-data-matrix (ECDM) inference on cross-covariance structure."""

from ecdm.baselines import SrBundle, sr_bundle, sr_delta, sr_test, sr_w
from ecdm.core import (
    EstimateBundle,
    PairedSample,
    SplitTable,
    build_split_table,
    ecdm_index_sets,
    estimate_bundle,
    pair_term,
    t_hat,
    w_stat,
)
from ecdm.errors import (
    DegenerateScale,
    EcdmError,
    NonpositiveScale,
    UndefinedDiagnostic,
    UnsupportedAssumption,
)
from ecdm.inference import (
    ConfidenceInterval,
    Diagnostics,
    StructureHypothesis,
    TestOutcome,
    confidence_interval,
    correlation_test,
    diagnostics,
    kappa_hat,
    rv_hat,
    structure_stat,
    structure_test,
)
from ecdm.normal import normal_cdf, normal_quantile

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval",
    "DegenerateScale",
    "Diagnostics",
    "EcdmError",
    "EstimateBundle",
    "NonpositiveScale",
    "PairedSample",
    "SplitTable",
    "SrBundle",
    "StructureHypothesis",
    "TestOutcome",
    "UndefinedDiagnostic",
    "UnsupportedAssumption",
    "build_split_table",
    "confidence_interval",
    "correlation_test",
    "diagnostics",
    "ecdm_index_sets",
    "estimate_bundle",
    "kappa_hat",
    "normal_cdf",
    "normal_quantile",
    "pair_term",
    "rv_hat",
    "sr_bundle",
    "sr_delta",
    "sr_test",
    "sr_w",
    "structure_stat",
    "structure_test",
    "t_hat",
    "w_stat",
]
