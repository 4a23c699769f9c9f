"""I2S: bimanual hand-pose descriptors and three-stage user identification.

Five descriptor families (Spatial, Orientation, Kinematic, Frequency, IHSE)
are pooled per sequence and feed a chained object -> interaction -> subject
classifier built on gradient-boosted trees.
"""

from .aggregate import DescriptorConfig, DescriptorVector, build_descriptor
from .ensemble import EnsembleModel, TrainParams
from .pipeline import (
    I2SModel,
    I2SPrediction,
    predict_pipeline,
    train_pipeline,
)
from .pose import Dataset, Sequence, load_sequences, save_sequences
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DescriptorConfig",
    "DescriptorVector",
    "EnsembleModel",
    "I2SModel",
    "I2SPrediction",
    "Sequence",
    "SynthConfig",
    "TrainParams",
    "build_descriptor",
    "generate",
    "load_sequences",
    "predict_pipeline",
    "save_sequences",
    "train_pipeline",
    "__version__",
]
