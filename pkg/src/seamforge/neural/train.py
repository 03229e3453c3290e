"""Teacher-forced NLL training of the toy model."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from ..errors import DivergenceError, TargetMaskedError
from ..mesh import Mesh
from ..ordering import OrderedChains
from ..seams import N_SPECIAL, ChainSet, tokenize
from ..traversal import DecodeState, candidate_mask, to_stream
from .config import ModelConfig, TrainConfig
from .features import MeshInputs, prepare_inputs
from .model import SeamModel

log = logging.getLogger(__name__)


def stream_masks(mesh: Mesh, stream: Sequence[int]) -> np.ndarray:
    """Row t is the candidate mask after consuming ``stream[:t]``."""
    state = DecodeState()
    rows = []
    for token in stream:
        rows.append(candidate_mask(state, mesh.adjacency))
        state = state.advance(token)
    return np.array(rows, dtype=bool).reshape(len(rows), mesh.n_vertices + N_SPECIAL)


def nll_loss(logits: torch.Tensor, targets, masks) -> torch.Tensor:
    """Token-mean negative log-likelihood of ``targets`` under masked softmax."""
    targets = torch.as_tensor(targets, dtype=torch.long)
    masks = torch.as_tensor(masks, dtype=torch.bool)
    if logits.shape != masks.shape or logits.shape[0] != targets.shape[0]:
        raise ValueError(f"shape mismatch: logits {tuple(logits.shape)}, masks {tuple(masks.shape)}, "
                         f"targets {tuple(targets.shape)}")
    steps = torch.arange(len(targets))
    bad = ~masks[steps, targets]
    if bad.any():
        t = int(torch.nonzero(bad)[0])
        raise TargetMaskedError(f"target {int(targets[t])} at step {t} is masked out")
    logp = torch.log_softmax(logits.masked_fill(~masks, float("-inf")), dim=-1)
    return -logp[steps, targets].mean()


@dataclass
class Example:
    mesh: Mesh
    inputs: MeshInputs
    stream: tuple[int, ...]
    masks: torch.Tensor

    @classmethod
    def build(cls, mesh: Mesh, chains: OrderedChains | ChainSet, config: ModelConfig,
              seed: int = 0, dtype=torch.float32) -> "Example":
        seq = chains.as_chainset() if isinstance(chains, OrderedChains) else chains
        stream = to_stream(tokenize(seq))
        if len(stream) > config.max_len:
            raise ValueError(f"sequence of {len(stream)} tokens exceeds max_len={config.max_len}")
        inputs = prepare_inputs(mesh, config.shape_points, config.shape_tokens, seed=seed, dtype=dtype)
        return cls(mesh, inputs, stream, torch.from_numpy(stream_masks(mesh, stream)))


def sequence_loss(model: SeamModel, ex: Example) -> torch.Tensor:
    emb, z = model.encode(ex.inputs)
    logits = model.decoder_forward(ex.stream[:-1], emb.enhanced, z)
    return nll_loss(logits, ex.stream, ex.masks)


@dataclass
class TrainResult:
    model: SeamModel
    losses: list[float]
    seconds: float

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss"])
            for k, loss in enumerate(self.losses):
                w.writerow([k, f"{loss:.9g}"])


def train_toy(dataset, model_config: Optional[ModelConfig] = None,
              train_config: Optional[TrainConfig] = None,
              model: Optional[SeamModel] = None) -> TrainResult:
    """Optimize the NLL with AdamW over ``(mesh, chains)`` pairs.

    Gradients are summed over a batch of sequences and averaged before each
    step.  The per-epoch loss is the mean sequence loss seen during that epoch.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    mc = model_config or ModelConfig.toy()
    tc = train_config or TrainConfig()
    torch.manual_seed(tc.seed)
    if model is None:
        model = SeamModel(mc)
    examples = [e if isinstance(e, Example) else Example.build(e[0], e[1], mc, seed=tc.seed)
                for e in dataset]
    rng = np.random.default_rng(tc.seed)
    opt = torch.optim.AdamW(model.parameters(), lr=tc.lr, weight_decay=tc.weight_decay)
    steps_per_epoch = math.ceil(len(examples) / tc.batch_size)
    total = max(1, tc.epochs * steps_per_epoch)
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt, (lambda s: 0.5 * (1 + math.cos(math.pi * min(s, total) / total))) if tc.cosine else (lambda s: 1.0))

    losses: list[float] = []
    start = time.perf_counter()
    model.train()
    for epoch in range(tc.epochs):
        order = rng.permutation(len(examples))
        seen = []
        for b in range(0, len(order), tc.batch_size):
            batch = [examples[i] for i in order[b:b + tc.batch_size]]
            opt.zero_grad(set_to_none=True)
            for ex in batch:
                loss = sequence_loss(model, ex)
                if not torch.isfinite(loss):
                    raise DivergenceError(f"non-finite loss at epoch {epoch}, step {b // tc.batch_size}, "
                                          f"lr={sched.get_last_lr()[0]:.3g}")
                (loss / len(batch)).backward()
                seen.append(loss.item())
            if tc.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), tc.grad_clip)
            opt.step()
            sched.step()
        losses.append(float(np.mean(seen)))
        if tc.log_every and (epoch % tc.log_every == 0 or epoch == tc.epochs - 1):
            log.info("epoch %d loss %.5f", epoch, losses[-1])
    model.eval()
    return TrainResult(model, losses, time.perf_counter() - start)


def loss_non_increasing(losses: Sequence[float], band: float = 0.05) -> bool:
    """Every epoch stays within ``band * losses[0]`` of the best loss so far."""
    if not losses:
        return True
    slack = band * losses[0]
    best = losses[0]
    for x in losses[1:]:
        if x > best + slack:
            return False
        best = min(best, x)
    return True
