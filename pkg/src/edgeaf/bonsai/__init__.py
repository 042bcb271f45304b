"""Resource-bounded shallow tree classifier."""
from .model import BonsaiModel, n_internal, n_nodes, predict
from .serialize import (deserialize, expected_size, load_model, model_size_bytes,
                        save_model, serialize)
from .timing import InferenceTiming, measure_inference, measure_inference_many
from .train import TrainConfig, loss_and_grad, train

__all__ = [
    "BonsaiModel", "InferenceTiming", "TrainConfig", "deserialize", "expected_size",
    "load_model", "loss_and_grad", "measure_inference", "measure_inference_many",
    "model_size_bytes", "n_internal", "n_nodes", "predict", "save_model", "serialize",
    "train",
]
