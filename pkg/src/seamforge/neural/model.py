"""Dual-stream vertex encoder and pointer decoder."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from ..seams import EOC, EOS, N_SPECIAL
from .config import ModelConfig
from .features import MeshInputs, fourier_dim, fourier_features, prepare_inputs


def rope(x: torch.Tensor, positions: torch.Tensor, base: float = 10000.0) -> torch.Tensor:
    """Rotate consecutive channel pairs of ``x[..., T, dh]`` by position-dependent angles."""
    dh = x.shape[-1]
    inv = base ** (-torch.arange(0, dh, 2, dtype=x.dtype, device=x.device) / dh)
    angle = positions.to(x.dtype)[:, None] * inv[None, :]
    cos, sin = torch.cos(angle), torch.sin(angle)
    x1, x2 = x[..., 0::2], x[..., 1::2]
    out = torch.stack([x1 * cos - x2 * sin, x1 * sin + x2 * cos], dim=-1)
    return out.flatten(-2)


class Attention(nn.Module):
    """Multi-head attention without biases; optionally causal with rotary positions."""

    def __init__(self, d: int, heads: int, rotary: bool = False):
        super().__init__()
        self.heads = heads
        self.rotary = rotary
        self.q = nn.Linear(d, d, bias=False)
        self.k = nn.Linear(d, d, bias=False)
        self.v = nn.Linear(d, d, bias=False)
        self.o = nn.Linear(d, d, bias=False)

    def _split(self, x):
        return x.view(x.shape[0], self.heads, -1).transpose(0, 1)  # (H, T, dh)

    def forward(self, x, context, causal: bool = False, positions: Optional[torch.Tensor] = None):
        q, k, v = self._split(self.q(x)), self._split(self.k(context)), self._split(self.v(context))
        if self.rotary:
            q, k = rope(q, positions), rope(k, positions)
        scores = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
        if causal:
            t = x.shape[0]
            future = torch.ones(t, t, dtype=torch.bool, device=x.device).triu(1)
            scores = scores.masked_fill(future, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(0, 1).reshape(x.shape[0], -1)
        return self.o(out), weights


class SAGELayer(nn.Module):
    """Self transform plus mean-of-neighbors transform, then SiLU and LayerNorm."""

    def __init__(self, d_in: int, d_out: int):
        super().__init__()
        self.self_lin = nn.Linear(d_in, d_out)
        self.neigh_lin = nn.Linear(d_in, d_out, bias=False)
        self.norm = nn.LayerNorm(d_out)

    def forward(self, h, src, dst, degree):
        agg = torch.zeros_like(h).index_add(0, dst, h[src]) / degree.clamp(min=1)
        return self.norm(F.silu(self.self_lin(h) + self.neigh_lin(agg)))


class CrossAttnLayer(nn.Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.norm = nn.LayerNorm(d)
        self.attn = Attention(d, heads)

    def forward(self, h, z):
        out, weights = self.attn(self.norm(h), z)
        return h + out, weights


class DecoderBlock(nn.Module):
    def __init__(self, d: int, heads: int, ffn_mult: int):
        super().__init__()
        self.norm1, self.norm2, self.norm3 = nn.LayerNorm(d), nn.LayerNorm(d), nn.LayerNorm(d)
        self.self_attn = Attention(d, heads, rotary=True)
        self.cross_attn = Attention(d, heads)
        self.ffn = nn.Sequential(nn.Linear(d, ffn_mult * d), nn.SiLU(), nn.Linear(ffn_mult * d, d))

    def forward(self, x, z, positions):
        x = x + self.self_attn(self.norm1(x), self.norm1(x), causal=True, positions=positions)[0]
        x = x + self.cross_attn(self.norm2(x), z)[0]
        return x + self.ffn(self.norm3(x))


@dataclass
class VertexEmbeddings:
    raw: torch.Tensor       # point features p_i
    graph: torch.Tensor     # fused connectivity features h_i
    enhanced: Optional[torch.Tensor] = None


def chain_positions(inputs: Sequence[int]) -> list[int]:
    """Steps since the last EOC after consuming each input token (BOS counts as a chain start)."""
    out, pos = [], 0
    for k, t in enumerate(inputs):
        if k == 0 or t == EOC or t == EOS:
            pos = 0
        else:
            pos += 1
        out.append(pos)
    return out


class SeamModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = c = config
        fin = fourier_dim(c.fourier_bands)
        self.point_mlp = nn.Sequential(nn.Linear(fin, c.d_point), nn.SiLU(), nn.Linear(c.d_point, c.d_point))
        widths = (c.d_point,) + c.graph_widths
        self.graph = nn.ModuleList(SAGELayer(a, b) for a, b in zip(widths, widths[1:]))
        self.fuse = nn.Linear(c.graph_widths[-1] + c.d_point, c.d_model, bias=False)
        self.shape_mlp = nn.Sequential(nn.Linear(fin, c.d_model), nn.SiLU(), nn.Linear(c.d_model, c.d_model))
        self.shape_proj = nn.Linear(c.d_model, c.d_model)
        self.cross = nn.ModuleList(CrossAttnLayer(c.d_model, c.heads) for _ in range(c.cross_attn_layers))
        self.e_eoc = nn.Parameter(torch.empty(c.d_model))
        self.e_eos = nn.Parameter(torch.empty(c.d_model))
        self.e_bos = nn.Parameter(torch.empty(c.d_model))
        self.chain_pos = nn.Parameter(torch.empty(c.max_len, c.d_model))
        self.blocks = nn.ModuleList(DecoderBlock(c.d_model, c.heads, c.ffn_mult) for _ in range(c.decoder_layers))
        self.out_norm = nn.LayerNorm(c.d_model)
        self.pointer = nn.Linear(c.d_model, c.d_model, bias=False)
        self.reset_parameters()

    def reset_parameters(self):
        """Uniform initialization scaled by fan-in; norms start at identity."""
        for name, p in self.named_parameters():
            if "norm" in name:
                nn.init.ones_(p) if name.endswith("weight") else nn.init.zeros_(p)
            elif p.dim() == 2 and name != "chain_pos":
                bound = 1.0 / math.sqrt(p.shape[1])
                nn.init.uniform_(p, -bound, bound)
            elif name.endswith("bias"):
                nn.init.zeros_(p)
            else:
                bound = 1.0 / math.sqrt(self.config.d_model)
                nn.init.uniform_(p, -bound, bound)

    # encoder ---------------------------------------------------------------

    def graph_encode(self, inputs: MeshInputs) -> VertexEmbeddings:
        p = self.point_mlp(fourier_features(inputs.vertex_coords, self.config.fourier_bands))
        h = p
        for layer in self.graph:
            h = layer(h, inputs.src, inputs.dst, inputs.degree)
        return VertexEmbeddings(raw=p, graph=self.fuse(torch.cat([h, p], dim=-1)))

    def shape_tokens(self, inputs: MeshInputs) -> torch.Tensor:
        feats = self.shape_mlp(fourier_features(inputs.points, self.config.fourier_bands))
        sums = feats.new_zeros(inputs.n_anchors, feats.shape[1]).index_add(0, inputs.anchor_of, feats)
        counts = torch.bincount(inputs.anchor_of, minlength=inputs.n_anchors).clamp(min=1)
        return self.shape_proj(sums / counts[:, None].to(feats.dtype))

    def cross_attend(self, h: torch.Tensor, z: torch.Tensor, return_weights: bool = False):
        weights = []
        for layer in self.cross:
            h, w = layer(h, z)
            weights.append(w)
        return (h, weights) if return_weights else h

    def encode(self, inputs: MeshInputs, z: Optional[torch.Tensor] = None):
        """Enhanced vertex embeddings and shape tokens; ``z`` overrides the built-in provider."""
        emb = self.graph_encode(inputs)
        if z is None:
            z = self.shape_tokens(inputs)
        emb.enhanced = self.cross_attend(emb.graph, z)
        return emb, z

    # decoder ---------------------------------------------------------------

    def embed_inputs(self, inputs: Sequence[int], enhanced: torch.Tensor) -> torch.Tensor:
        """Decoder input rows for ``[BOS] + stream prefix`` plus chain-local positions."""
        table = torch.cat([self.e_eoc[None], self.e_eos[None], enhanced], dim=0)
        ids = torch.tensor(list(inputs[1:]), dtype=torch.long)
        rows = torch.cat([self.e_bos[None], table[ids]], dim=0) if len(inputs) > 1 else self.e_bos[None]
        pos = torch.tensor(chain_positions(inputs), dtype=torch.long).clamp(max=self.config.max_len - 1)
        return rows + self.chain_pos[pos]

    def decoder_forward(self, stream_prefix: Sequence[int], enhanced: torch.Tensor, z: torch.Tensor,
                        embedded: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Pointer logits ``(len(prefix) + 1, N + 2)``: row t scores the token after ``prefix[:t]``."""
        inputs = [-1] + list(stream_prefix)
        if len(inputs) > self.config.max_len:
            raise ValueError(f"prefix of {len(stream_prefix)} tokens exceeds max_len={self.config.max_len}")
        x = self.embed_inputs(inputs, enhanced) if embedded is None else embedded
        positions = torch.arange(x.shape[0])
        for block in self.blocks:
            x = block(x, z, positions)
        q = self.out_norm(x)
        cands = torch.cat([self.e_eoc[None], self.e_eos[None], enhanced], dim=0)
        return q @ self.pointer(cands).T

    def n_candidates(self, n_vertices: int) -> int:
        return n_vertices + N_SPECIAL


def _inputs(mesh, model: SeamModel, n_points: Optional[int] = None, seed: int = 0) -> MeshInputs:
    c = model.config
    dtype = next(model.parameters()).dtype
    return prepare_inputs(mesh, n_points or c.shape_points, c.shape_tokens, seed=seed, dtype=dtype)


def graph_encode(mesh, model: SeamModel, seed: int = 0) -> VertexEmbeddings:
    return model.graph_encode(_inputs(mesh, model, seed=seed))


def shape_token_provider(mesh, model: SeamModel, n_points: Optional[int] = None, seed: int = 0) -> torch.Tensor:
    """``(M, d)`` tokens from area-weighted surface samples pooled onto farthest-point anchors."""
    return model.shape_tokens(_inputs(mesh, model, n_points, seed))


def cross_attend(emb: VertexEmbeddings, z: torch.Tensor, model: SeamModel) -> VertexEmbeddings:
    return VertexEmbeddings(emb.raw, emb.graph, model.cross_attend(emb.graph, z))
