"""Geometric inputs to the network: Fourier features, surface samples, anchors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..mesh import Mesh, require_positive_area


def fourier_features(coords, bands: int):
    """``[sin(2^k pi x), cos(2^k pi x)]`` for k < bands, followed by the raw coordinates.

    Accepts a tensor or array of shape ``(..., c)``; returns ``(..., 2*bands*c + c)``.
    """
    if bands < 1:
        raise ValueError("bands must be >= 1")
    as_numpy = not isinstance(coords, torch.Tensor)
    x = torch.as_tensor(np.asarray(coords, dtype=np.float64)) if as_numpy else coords
    freqs = math.pi * 2.0 ** torch.arange(bands, dtype=x.dtype, device=x.device)
    scaled = x[..., None, :] * freqs[:, None]  # (..., bands, c)
    out = torch.cat([torch.sin(scaled).flatten(-2), torch.cos(scaled).flatten(-2), x], dim=-1)
    return out.numpy() if as_numpy else out


def fourier_dim(bands: int, channels: int = 6) -> int:
    return 2 * bands * channels + channels


def sample_surface(mesh: Mesh, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """Area-weighted uniform samples with face normals, shape ``(n_points, 6)``."""
    require_positive_area(mesh)
    weights = mesh.face_areas / mesh.face_areas.sum()
    faces = rng.choice(mesh.n_faces, size=n_points, p=weights)
    r1, r2 = rng.random(n_points), rng.random(n_points)
    s = np.sqrt(r1)
    bary = np.stack([1 - s, s * (1 - r2), s * r2], axis=1)
    tri = mesh.positions[mesh.faces[faces]]
    points = np.einsum("nk,nkc->nc", bary, tri)
    return np.concatenate([points, mesh.face_normals[faces]], axis=1)


def farthest_points(points: np.ndarray, k: int) -> np.ndarray:
    """Greedy farthest-point indices, starting from point 0."""
    k = min(k, len(points))
    chosen = [0]
    dist = np.linalg.norm(points - points[0], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.array(chosen, dtype=np.int64)


@dataclass
class MeshInputs:
    """Tensors the model consumes for one mesh (all precomputed, no gradients)."""

    vertex_coords: torch.Tensor     # (N, 6) position + normal
    src: torch.Tensor               # directed edge sources
    dst: torch.Tensor               # directed edge targets
    degree: torch.Tensor            # (N, 1)
    points: torch.Tensor            # (P, 6) surface samples
    anchor_of: torch.Tensor         # (P,) anchor index of each sample
    n_anchors: int

    @property
    def n_vertices(self) -> int:
        return self.vertex_coords.shape[0]

    def to(self, dtype) -> "MeshInputs":
        return MeshInputs(self.vertex_coords.to(dtype), self.src, self.dst, self.degree.to(dtype),
                          self.points.to(dtype), self.anchor_of, self.n_anchors)


def prepare_inputs(mesh: Mesh, n_points: int, n_anchors: int, seed: int = 0,
                   dtype=torch.float32) -> MeshInputs:
    coords = np.concatenate([mesh.positions, mesh.vertex_normals], axis=1)
    src, dst = [], []
    for v, nbrs in enumerate(mesh.adjacency.neighbors):
        src.extend(nbrs)
        dst.extend([v] * len(nbrs))
    degree = np.array([len(n) for n in mesh.adjacency.neighbors], dtype=np.float64)[:, None]
    pts = sample_surface(mesh, n_points, np.random.default_rng(seed))
    anchors = farthest_points(pts[:, :3], n_anchors)
    d = np.linalg.norm(pts[:, None, :3] - pts[anchors][None, :, :3], axis=2)
    return MeshInputs(
        torch.tensor(coords, dtype=dtype),
        torch.tensor(src, dtype=torch.long),
        torch.tensor(dst, dtype=torch.long),
        torch.tensor(degree, dtype=dtype),
        torch.tensor(pts, dtype=dtype),
        torch.tensor(np.argmin(d, axis=1), dtype=torch.long),
        len(anchors),
    )
