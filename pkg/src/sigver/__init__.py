"""sigver: online signature verification with a networked access server."""

__version__ = "0.1.0"

from . import errors
from .config import SystemConfig
from .matching import MatchScore, UserModel, build_model, dtw_distance, score, update_model
from .signals import (
    SignaturePoint,
    SignatureSample,
    extract_features,
    parse_sample,
    preprocess,
    sample_to_features,
    serialize_sample,
)

__all__ = [
    "errors",
    "SystemConfig",
    "MatchScore",
    "UserModel",
    "build_model",
    "dtw_distance",
    "score",
    "update_model",
    "SignaturePoint",
    "SignatureSample",
    "extract_features",
    "parse_sample",
    "preprocess",
    "sample_to_features",
    "serialize_sample",
]
