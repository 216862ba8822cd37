from .base import ARFF, CSV, SYNTHETIC, Origin, StreamSource
from .encoder import EncoderState, encode
from .csv_source import open_csv, scan_csv_labels
from .arff_source import open_arff
from .synthetic import (
    Concept,
    DriftSpec,
    GaussianDriftSource,
    RotatingHyperplaneSource,
    Segment,
    gaussian_drift_stream,
    rotating_hyperplane_stream,
)

__all__ = [
    "ARFF",
    "CSV",
    "SYNTHETIC",
    "Origin",
    "StreamSource",
    "EncoderState",
    "encode",
    "open_csv",
    "scan_csv_labels",
    "open_arff",
    "Concept",
    "DriftSpec",
    "Segment",
    "GaussianDriftSource",
    "RotatingHyperplaneSource",
    "gaussian_drift_stream",
    "rotating_hyperplane_stream",
]
