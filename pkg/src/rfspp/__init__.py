"""Random-finite-set likelihood models for point pattern data.

Point patterns (finite multi-sets of feature vectors) are modeled as
iid-cluster random finite sets: a cardinality distribution plus a feature
density.  The package provides the unit-consistent pattern density, a
unit-free novelty ranking score, separable maximum-likelihood fitting,
Bayes classification, quantile-threshold novelty detection, seeded
simulators and evaluation protocols.
"""

from .core import Dataset, LabeledPattern, PointPattern, UnitContext, read_jsonl, rescale_pattern, write_jsonl
from .errors import (
    CovarianceError,
    DataValidationError,
    DimensionMismatchError,
    EmptyDataError,
    NumericalError,
    OutOfSupportError,
    RFSError,
    SingularCovarianceError,
)
from .infer import BagClassifier, NoveltyDetector, Verdict, classify, detect, fit_threshold
from .learn import (
    FitConfig,
    fit_categorical_cardinality,
    fit_gaussian_features,
    fit_iid_cluster,
    fit_poisson_cardinality,
    fit_with_report,
    total_log_likelihood,
)
from .models import (
    CategoricalCardinality,
    FeatureDensity,
    GaussianDensity,
    IidClusterModel,
    PiecewiseConstantDensity,
    PoissonCardinality,
    cardinality_log_pmf,
    gaussian_l2_norm_sq,
    gaussian_log_pdf,
    model_from_dict,
    nb_log_likelihood,
    poisson_rfs_log_density,
    ranking_log_score,
    rfs_log_density,
)
from .sim import ScenarioSpec, generate_classification3, generate_novelty1, sample_pattern, sample_truncated_cardinality

__version__ = "0.1.0"
