"""Quaternion-based navigation unscented Kalman filter with an EKF baseline."""

from . import backend
from .ekf import EKF
from .errors import (
    BadCovariance,
    DegenerateMean,
    EmptyFeatureSet,
    IoError,
    MisalignedSeries,
    NavError,
    NonFiniteInput,
    NonMonotoneTime,
    NotAntisymmetric,
    NotPsd,
    NotRotation,
    ParseError,
    SingularInnovation,
    UnknownFeatureId,
)
from .filter import QNUKF, FilterEstimate
from .metrics import compute_metrics
from .model import FeatureFrame, ImuSample, NavState, NoiseConfig, TangentVector
from .unscented import UtParams

__version__ = "0.1.0"

__all__ = [
    "EKF", "QNUKF", "FilterEstimate", "NavState", "TangentVector", "ImuSample", "FeatureFrame",
    "NoiseConfig", "UtParams", "compute_metrics", "backend",
    "NavError", "NotAntisymmetric", "NotRotation", "DegenerateMean", "NotPsd", "SingularInnovation",
    "BadCovariance", "NonFiniteInput", "EmptyFeatureSet", "NonMonotoneTime", "ParseError",
    "UnknownFeatureId", "MisalignedSeries", "IoError",
]
