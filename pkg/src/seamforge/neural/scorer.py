"""Adapter that lets a trained model drive the masked decoder."""

from __future__ import annotations

import numpy as np
import torch

from ..mesh import Mesh
from ..traversal import DecodeContext, DecodeState
from .features import prepare_inputs
from .model import SeamModel


class ModelScorer:
    """Scores the next token from the full history; encoder outputs are computed once."""

    def __init__(self, model: SeamModel, mesh: Mesh, seed: int = 0):
        c = model.config
        self.model = model
        dtype = next(model.parameters()).dtype
        with torch.no_grad():
            emb, self.z = model.encode(prepare_inputs(mesh, c.shape_points, c.shape_tokens, seed=seed, dtype=dtype))
        self.enhanced = emb.enhanced

    def score(self, state: DecodeState, context: DecodeContext) -> np.ndarray:
        history = state.history[-(self.model.config.max_len - 1):]
        with torch.no_grad():
            logits = self.model.decoder_forward(history, self.enhanced, self.z)[-1]
        return logits.double().numpy()
