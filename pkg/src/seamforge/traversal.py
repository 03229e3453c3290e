"""Neighbor-masked autoregressive decoding over the candidate space.

The decoder works on a *stream*: chains separated by EOC and terminated by a
single EOS, where EOS may directly follow the last vertex.  A canonical
:class:`~seamforge.seams.TokenSequence` (``..., EOC, EOS``) maps to a stream by
folding the trailing ``EOC, EOS`` into one EOS; see :func:`to_stream`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol

import numpy as np

from .errors import ExhaustedTargetError, SeamforgeError
from .mesh import AdjacencyTable, Mesh, connected_components, edge_key
from .seams import (EOC, EOS, N_SPECIAL, ChainSet, SeamChain, TokenSequence, id_vertex, is_vertex,
                    tokenize, vertex_id)

log = logging.getLogger(__name__)

# finite stand-in for minus infinity in scorer outputs
LOGIT_FLOOR = -1e4


@dataclass(frozen=True)
class DecodeConfig:
    temperature: float = 0.1
    max_len: int = 400
    seed: int = 0
    greedy: bool = False
    allow_empty: bool = False

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.max_len < 2:
            raise ValueError(f"max_len must be at least 2, got {self.max_len}")


@dataclass(frozen=True)
class DecodeState:
    history: tuple[int, ...] = ()
    current_vertex: Optional[int] = None
    previous_vertex: Optional[int] = None
    chain_position: int = 0
    chain: tuple[int, ...] = ()
    n_closed: int = 0

    @property
    def finished(self) -> bool:
        return bool(self.history) and self.history[-1] == EOS

    @property
    def at_chain_start(self) -> bool:
        return not self.history or self.history[-1] == EOC

    def advance(self, token: int) -> "DecodeState":
        history = self.history + (int(token),)
        if is_vertex(token):
            v = id_vertex(token)
            return DecodeState(history, v, self.current_vertex, self.chain_position + 1,
                               self.chain + (v,), self.n_closed)
        return DecodeState(history, None, None, 0, (), self.n_closed + (token == EOC))

    @classmethod
    def from_history(cls, history) -> "DecodeState":
        state = cls()
        for t in history:
            state = state.advance(t)
        return state


class Scorer(Protocol):
    def score(self, state: DecodeState, context: "DecodeContext") -> np.ndarray:
        """Finite logits over all ``n_vertices + 2`` candidates."""


@dataclass(frozen=True)
class DecodeContext:
    mesh: Mesh
    adjacency: AdjacencyTable

    @property
    def n_candidates(self) -> int:
        return self.mesh.n_vertices + N_SPECIAL


def candidate_mask(state: DecodeState, adjacency: AdjacencyTable, allow_empty: bool = False) -> np.ndarray:
    """Boolean mask over candidate ids of the tokens allowed next."""
    mask = np.zeros(adjacency.n_vertices + N_SPECIAL, dtype=bool)
    if state.finished:
        return mask
    if state.current_vertex is None:
        mask[N_SPECIAL:] = True
        if allow_empty and not state.history:
            mask[EOS] = True
        return mask
    nbrs = [n for n in adjacency.neighbors[state.current_vertex] if n != state.previous_vertex]
    mask[np.asarray(nbrs, dtype=np.int64) + N_SPECIAL] = True
    mask[EOC] = mask[EOS] = True
    return mask


def masked_log_softmax(logits: np.ndarray, mask: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Log-probabilities with ``-inf`` on disallowed candidates."""
    z = np.where(mask, np.asarray(logits, dtype=np.float64) / temperature, -np.inf)
    top = z.max()
    return z - (top + math.log(np.exp(z - top).sum()))


def to_stream(tokens: TokenSequence) -> tuple[int, ...]:
    ids = tokens.ids
    if len(ids) >= 3 and ids[-2:] == (EOC, EOS):
        return ids[:-2] + (EOS,)
    return ids


def from_stream(stream) -> TokenSequence:
    ids = tuple(stream)
    if len(ids) >= 2 and ids[-1] == EOS and is_vertex(ids[-2]):
        ids = ids[:-1] + (EOC, EOS)
    return TokenSequence(ids)


def split_stream(stream) -> list[tuple[int, ...]]:
    """Vertex runs of a stream, one per chain, including length-1 runs."""
    runs, cur = [], []
    for t in stream:
        if is_vertex(t):
            cur.append(id_vertex(t))
        else:
            if cur:
                runs.append(tuple(cur))
            cur = []
    if cur:
        runs.append(tuple(cur))
    return runs


def sanitize_run(run: tuple[int, ...], used: set) -> list[SeamChain]:
    """Cut a vertex run at edges already in ``used`` (updated) and drop edgeless pieces."""
    pieces, cur = [], [run[0]]
    for a, b in zip(run, run[1:]):
        e = edge_key(a, b)
        if e in used or a == b:
            if len(cur) >= 2:
                pieces.append(SeamChain(tuple(cur)))
            cur = [b]
        else:
            used.add(e)
            cur.append(b)
    if len(cur) >= 2:
        pieces.append(SeamChain(tuple(cur)))
    return pieces


@dataclass
class SubmeshRecord:
    depth: int
    branch: tuple[int, ...]
    faces: tuple[int, ...]
    area: float
    n_faces: int
    decoded: bool

    def to_json(self) -> dict:
        return {"depth": self.depth, "branch": list(self.branch), "n_faces": self.n_faces,
                "area": self.area, "decoded": self.decoded}


@dataclass
class DecodeResult:
    chains: ChainSet
    stream: tuple[int, ...]
    truncated: bool = False
    depth_capped: bool = False
    chain_logprobs: list[float] = field(default_factory=list)
    submeshes: list[SubmeshRecord] = field(default_factory=list)

    @property
    def tokens(self) -> TokenSequence:
        return tokenize(self.chains)

    def to_json(self) -> dict:
        data = self.chains.to_json()
        for entry, lp in zip(data["chains"], self.chain_logprobs):
            entry["logprob"] = lp
        data["truncated"] = self.truncated
        data["depth_capped"] = self.depth_capped
        if self.submeshes:
            data["submeshes"] = [s.to_json() for s in self.submeshes]
        return data


class Decoder:
    """Stepwise sampler; keeps the stream, per-chain log-probabilities and RNG."""

    def __init__(self, mesh: Mesh, scorer: Scorer, config: DecodeConfig,
                 rng: Optional[np.random.Generator] = None):
        self.context = DecodeContext(mesh, mesh.adjacency)
        self.scorer = scorer
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.state = DecodeState()
        self.truncated = False
        self.run_logprobs: list[float] = []
        self._lp = 0.0

    def _choose(self, logp: np.ndarray) -> int:
        if self.config.greedy:
            return int(np.argmax(logp))
        allowed = np.flatnonzero(np.isfinite(logp))
        cdf = np.cumsum(np.exp(logp[allowed]))
        k = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
        return int(allowed[min(k, len(allowed) - 1)])

    def step(self) -> int:
        state = self.state
        if state.finished:
            raise SeamforgeError("decoder already emitted EOS")
        if len(state.history) >= self.config.max_len - 1:
            self.truncated = True
            token, lp = EOS, 0.0
        else:
            mask = candidate_mask(state, self.context.adjacency, self.config.allow_empty)
            if state.current_vertex is not None and not mask[N_SPECIAL:].any():
                token, lp = EOC, 0.0  # dead end: no admissible neighbor
            else:
                logits = np.asarray(self.scorer.score(state, self.context), dtype=np.float64)
                if logits.shape != mask.shape:
                    raise SeamforgeError(f"scorer returned {logits.shape}, expected {mask.shape}")
                if not np.isfinite(logits).all():
                    raise SeamforgeError("scorer returned non-finite logits")
                logp = masked_log_softmax(logits, mask, self.config.temperature)
                token = self._choose(logp)
                lp = float(logp[token])
        self._lp += lp
        self.state = state.advance(token)
        if not is_vertex(token):
            if state.current_vertex is not None:
                self.run_logprobs.append(self._lp)
            self._lp = 0.0
        return token

    def next_chain(self) -> tuple[tuple[int, ...], bool]:
        """Decode until the current chain closes; returns its vertices and whether EOS was hit."""
        verts = []
        while True:
            token = self.step()
            if is_vertex(token):
                verts.append(id_vertex(token))
            else:
                return tuple(verts), token == EOS

    def run(self) -> tuple[int, ...]:
        while not self.state.finished:
            self.step()
        return self.state.history


def _assemble(runs, logprobs, used: set, vertex_map=None):
    chains, lps = [], []
    for run, lp in zip(runs, logprobs):
        if vertex_map is not None:
            run = tuple(int(vertex_map[v]) for v in run)
        for piece in sanitize_run(run, used):
            chains.append(piece)
            lps.append(lp)
    return chains, lps


def decode(mesh: Mesh, scorer: Scorer, config: DecodeConfig = DecodeConfig()) -> DecodeResult:
    """Sample chains until EOS or ``max_len``.

    Runs of a single vertex are dropped, and a chain that re-walks an already
    emitted edge is cut there so the result always has disjoint edges.
    """
    dec = Decoder(mesh, scorer, config)
    stream = dec.run()
    chains, lps = _assemble(split_stream(stream), dec.run_logprobs, set())
    if dec.truncated:
        log.info("decode hit max_len=%d", config.max_len)
    return DecodeResult(ChainSet(tuple(chains)), stream, dec.truncated, chain_logprobs=lps)


class ReplayScorer:
    """Puts a large logit on the next candidate of a fixed target."""

    def __init__(self, target: TokenSequence, logit: float = 1e3):
        self.stream = to_stream(target)
        self.logit = logit

    def score(self, state: DecodeState, context: DecodeContext) -> np.ndarray:
        step = len(state.history)
        if step >= len(self.stream):
            raise ExhaustedTargetError(f"target has {len(self.stream)} steps, queried step {step}")
        out = np.zeros(context.n_candidates)
        out[self.stream[step]] = self.logit
        return out


def replay_scorer(target: TokenSequence) -> ReplayScorer:
    return ReplayScorer(target)


def _signed_dihedral(mesh: Mesh) -> dict:
    """Per interior edge: angle between face normals, positive where the surface folds inward."""
    out = {}
    normals = mesh.face_normals
    pos = mesh.positions
    for e, fs in mesh.adjacency.edge_faces.items():
        if len(fs) != 2:
            out[e] = 0.0
            continue
        f, g = fs
        angle = math.acos(float(np.clip(normals[f] @ normals[g], -1.0, 1.0)))
        apex = [v for v in mesh.faces[g].tolist() if v not in e][0]
        side = float(normals[f] @ (pos[apex] - pos[e[0]]))
        out[e] = angle if side > 0 else -angle
    return out


class HeuristicScorer:
    """Geometry-only scorer: follows concave creases and keeps walking straight.

    Specials grow with chain length; EOS overtakes EOC after a few chains so
    decoding ends on its own well before ``max_len``.
    """

    def __init__(self, mesh: Mesh, crease_weight: float = 1.0, straight_weight: float = 0.5,
                 reuse_penalty: float = 4.0, revisit_penalty: float = 2.0, close_bonus: float = 3.0,
                 eoc_rate: float = 0.15, eoc_bias: float = 1.0, eos_gap: float = 1.5,
                 eos_rate: float = 0.6):
        self.mesh = mesh
        self.concavity = _signed_dihedral(mesh)
        n = mesh.n_vertices
        vc = np.full(n, -np.inf)
        for (a, b), c in self.concavity.items():
            vc[a] = max(vc[a], c)
            vc[b] = max(vc[b], c)
        self.vertex_concavity = np.where(np.isfinite(vc), vc, 0.0)
        self.crease_weight = crease_weight
        self.straight_weight = straight_weight
        self.reuse_penalty = reuse_penalty
        self.revisit_penalty = revisit_penalty
        self.close_bonus = close_bonus
        self.eoc_rate, self.eoc_bias = eoc_rate, eoc_bias
        self.eos_gap, self.eos_rate = eos_gap, eos_rate
        self._cache: tuple = ((), set())

    def _used_edges(self, history) -> set:
        cached, used = self._cache
        if history[:len(cached)] != cached:
            cached, used = (), set()
        else:
            used = set(used)
        prev = id_vertex(cached[-1]) if cached and is_vertex(cached[-1]) else None
        for t in history[len(cached):]:
            if is_vertex(t):
                v = id_vertex(t)
                if prev is not None:
                    used.add(edge_key(prev, v))
                prev = v
            else:
                prev = None
        self._cache = (tuple(history), used)
        return used

    def neighbor_scores(self, state: DecodeState) -> dict[int, float]:
        v, p = state.current_vertex, state.previous_vertex
        pos = self.mesh.positions
        used = self._used_edges(state.history)
        heading = None
        if p is not None:
            heading = pos[v] - pos[p]
            heading = heading / (np.linalg.norm(heading) or 1.0)
        out = {}
        start = state.chain[0]
        for u in self.mesh.adjacency.neighbors[v]:
            e = edge_key(v, u)
            s = self.crease_weight * self.concavity[e]
            if heading is not None:
                step = pos[u] - pos[v]
                s += self.straight_weight * float(heading @ step) / (np.linalg.norm(step) or 1.0)
            if e in used:
                s -= self.reuse_penalty
            if u == start and state.chain_position >= 3:
                s += self.close_bonus
            elif u in state.chain:
                s -= self.revisit_penalty
            out[u] = s
        return out

    def score(self, state: DecodeState, context: DecodeContext) -> np.ndarray:
        n = self.mesh.n_vertices
        logits = np.full(n + N_SPECIAL, LOGIT_FLOOR)
        if state.current_vertex is None:
            used = self._used_edges(state.history)
            start = self.crease_weight * self.vertex_concavity.copy()
            for a, b in used:
                start[a] -= 1.0
                start[b] -= 1.0
            logits[N_SPECIAL:] = start
            return logits
        for u, s in self.neighbor_scores(state).items():
            logits[u + N_SPECIAL] = s
        eoc = self.eoc_rate * state.chain_position - self.eoc_bias
        if state.chain_position > 2 and state.current_vertex == state.chain[0]:
            eoc += 10.0
        logits[EOC] = eoc
        logits[EOS] = eoc - self.eos_gap + self.eos_rate * state.n_closed
        return logits


def heuristic_scorer(mesh: Mesh) -> HeuristicScorer:
    return HeuristicScorer(mesh)


ScorerFactory = Callable[[Mesh], Scorer]


def divide_and_conquer_decode(mesh: Mesh, scorer_factory: ScorerFactory,
                              config: DecodeConfig = DecodeConfig(), min_faces: int = 64,
                              max_depth: int = 8) -> DecodeResult:
    """Decode chain by chain; once the chains of a patch disconnect it, recurse per piece.

    Sub-meshes with at most ``min_faces`` faces are kept but not decoded.  A
    mesh that starts at or below ``min_faces`` is decoded once without
    splitting.  Chains are returned in the input mesh's vertex indices.
    """
    chains: list[SeamChain] = []
    logprobs: list[float] = []
    used: set = set()
    records: list[SubmeshRecord] = []
    flags = {"truncated": False, "capped": False}
    streams: list[tuple[int, ...]] = []

    def solve(local: Mesh, vmap: np.ndarray, fmap: np.ndarray, depth: int, branch: tuple[int, ...]):
        if depth > max_depth:
            flags["capped"] = True
            return
        seed_seq = np.random.SeedSequence(config.seed, spawn_key=branch)
        dec = Decoder(local, scorer_factory(local), config, np.random.default_rng(seed_seq))
        if local.n_faces <= min_faces and depth == 0:
            dec.run()
            streams.append(dec.state.history)
            new, lps = _assemble(split_stream(dec.state.history), dec.run_logprobs, used, vmap)
            chains.extend(new)
            logprobs.extend(lps)
            flags["truncated"] |= dec.truncated
            return
        local_edges: list = []
        while True:
            run, ended = dec.next_chain()
            if len(run) >= 2:
                new, lps = _assemble([run], dec.run_logprobs[-1:], used, vmap)
                chains.extend(new)
                logprobs.extend(lps)
                local_edges.extend(edge_key(a, b) for a, b in zip(run, run[1:]))
                parts = connected_components(local, blocked_edges=local_edges)
                if len(parts) > 1:
                    streams.append(dec.state.history)
                    flags["truncated"] |= dec.truncated
                    for i, part in enumerate(parts):
                        sub, sub_vmap = local.submesh(part.faces)
                        faces = tuple(int(f) for f in fmap[sorted(part.faces)])
                        recurse = sub.n_faces > min_faces
                        records.append(SubmeshRecord(depth + 1, branch + (i,), faces, part.area,
                                                     sub.n_faces, recurse))
                        if recurse:
                            solve(sub, vmap[sub_vmap], np.asarray(faces), depth + 1, branch + (i,))
                    return
            if ended:
                streams.append(dec.state.history)
                flags["truncated"] |= dec.truncated
                return

    solve(mesh, np.arange(mesh.n_vertices), np.arange(mesh.n_faces), 0, ())
    stream = tuple(t for s in streams for t in s)
    return DecodeResult(ChainSet(tuple(chains)), stream, flags["truncated"], flags["capped"],
                        logprobs, records)


def with_seed(config: DecodeConfig, seed: int) -> DecodeConfig:
    return replace(config, seed=seed)
