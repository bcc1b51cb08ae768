"""Parameter-efficient adapter training and serving for the NLU harness."""

from .adapters import TECHNIQUES, install_adapter
from .errors import ConfigError, DataError, LoadError, PortInUse, ResourceError, TrainerError
from .model import ModelConfig, Seq2SeqModel, build_model, parameter_count
from .serve import AdapterServer, load_artifact, serve_adapter
from .train import (
    AdapterArtifact,
    PeftConfig,
    read_instruction_dataset,
    select_hyperparameters,
    train_adapter,
)
from .vocab import WordVocab

__version__ = "0.1.0"

__all__ = [
    "AdapterArtifact",
    "AdapterServer",
    "ConfigError",
    "DataError",
    "LoadError",
    "ModelConfig",
    "PeftConfig",
    "PortInUse",
    "ResourceError",
    "Seq2SeqModel",
    "TECHNIQUES",
    "TrainerError",
    "WordVocab",
    "build_model",
    "install_adapter",
    "load_artifact",
    "parameter_count",
    "read_instruction_dataset",
    "select_hyperparameters",
    "serve_adapter",
    "train_adapter",
]
