from .base import (
    KNN,
    MAJORITY_CLASS,
    NAIVE_BAYES,
    NO_CHANGE,
    REMOTE,
    Predictor,
    PredictorConfig,
    build_predictor,
)
from .local import (
    GaussianNaiveBayesPredictor,
    KnnPredictor,
    MajorityClassPredictor,
    NoChangePredictor,
    knn_distribution,
)
from .mock_server import FaultSpec, MockPredictServer, serve_stdio
from .remote import RemotePredictor, remote_predict

__all__ = [
    "KNN",
    "NAIVE_BAYES",
    "NO_CHANGE",
    "MAJORITY_CLASS",
    "REMOTE",
    "Predictor",
    "PredictorConfig",
    "build_predictor",
    "knn_distribution",
    "KnnPredictor",
    "GaussianNaiveBayesPredictor",
    "NoChangePredictor",
    "MajorityClassPredictor",
    "RemotePredictor",
    "remote_predict",
    "MockPredictServer",
    "FaultSpec",
    "serve_stdio",
]
