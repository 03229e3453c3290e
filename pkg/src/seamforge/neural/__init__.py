"""Toy-scale dual-stream encoder and pointer decoder (requires torch)."""

from .config import ModelConfig, TrainConfig
from .features import MeshInputs, fourier_features, prepare_inputs
from .io import load_weights, save_weights
from .model import SeamModel, VertexEmbeddings, cross_attend, graph_encode, shape_token_provider
from .scorer import ModelScorer
from .train import Example, TrainResult, nll_loss, train_toy

__all__ = ["ModelConfig", "TrainConfig", "MeshInputs", "fourier_features", "prepare_inputs",
           "SeamModel", "VertexEmbeddings", "cross_attend", "graph_encode", "shape_token_provider",
           "load_weights", "save_weights", "ModelScorer", "Example", "TrainResult", "nll_loss",
           "train_toy"]
