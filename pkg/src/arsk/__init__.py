"""Adaptively robust and sparse k-means clustering."""
from ._backend import BACKEND
from .exceptions import (
    ArskError,
    DegenerateStructureError,
    DegenerateWeightsError,
    InvalidInputError,
    InvalidParameterError,
    NonConvergenceError,
    ParseError,
    TuningFailedError,
)
from .metrics import cer, cer_with_outliers, outlier_confusion, tpr_tnr
from .model import (
    ClusterModel,
    DataMatrix,
    ErrorMatrix,
    FitResult,
    PenaltySpec,
    WeightVector,
    validate,
)
from .simgen import SimConfig, SimDataset, gen_dataset
from .solver import ArskOptions, fit
from .tuning import TuneConfig, TuneResult, gap, tune
from .wkmeans import KMeansOptions, kmeans, trimmed_kmeans

__version__ = "0.1.0"
