"""Seam edges, seam chains and their token serialization.

Candidate ids: ``EOC -> 0``, ``EOS -> 1``, vertex ``i -> i + 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import ChainError, DuplicateEdgeError, MalformedTokensError, MissingUVError
from .mesh import AdjacencyTable, Edge, Mesh, edge_key

EOC = 0
EOS = 1
N_SPECIAL = 2

CHAINS_SCHEMA = "seamforge.chains/1"
SEAMS_SCHEMA = "seamforge.seams/1"
TOKENS_SCHEMA = "seamforge.tokens/1"


def vertex_id(v: int) -> int:
    return int(v) + N_SPECIAL


def is_vertex(cid: int) -> bool:
    return cid >= N_SPECIAL


def id_vertex(cid: int) -> int:
    return int(cid) - N_SPECIAL


@dataclass(frozen=True)
class SeamEdgeSet:
    edges: frozenset[Edge]

    @classmethod
    def of(cls, edges: Iterable[Iterable[int]]) -> "SeamEdgeSet":
        return cls(frozenset(edge_key(*e) for e in edges))

    def __len__(self):
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(sorted(self.edges))

    def __contains__(self, e):
        return edge_key(*e) in self.edges

    def validate(self, adjacency: AdjacencyTable) -> None:
        missing = sorted(e for e in self.edges if e not in adjacency.edge_faces)
        if missing:
            raise ChainError(f"seam {missing[0]} is not a mesh edge")

    def length(self, mesh: Mesh) -> float:
        return float(sum(mesh.edge_length(a, b) for a, b in self))

    def to_json(self) -> dict:
        return {"schema": SEAMS_SCHEMA, "edges": [list(e) for e in self]}

    @classmethod
    def from_json(cls, data: dict) -> "SeamEdgeSet":
        return cls.of(data["edges"])


@dataclass(frozen=True)
class SeamChain:
    """Vertex walk along mesh edges; a loop repeats its first vertex at the end."""

    vertices: tuple[int, ...]

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ChainError(f"chain needs at least 2 vertices, got {len(verts)}")
        edges = self.edges()
        if len(set(edges)) != len(edges):
            raise ChainError(f"chain starting at {verts[0]} repeats an edge")
        if any(a == b for a, b in zip(verts, verts[1:])):
            raise ChainError(f"chain starting at {verts[0]} has a zero-length step")

    @property
    def is_loop(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    def edges(self) -> list[Edge]:
        v = self.vertices
        return [edge_key(a, b) for a, b in zip(v, v[1:])]

    def length(self, mesh: Mesh) -> float:
        v = mesh.positions[list(self.vertices)]
        return float(np.linalg.norm(np.diff(v, axis=0), axis=1).sum())

    def validate(self, adjacency: AdjacencyTable) -> None:
        for a, b in zip(self.vertices, self.vertices[1:]):
            if not adjacency.has_edge(a, b):
                raise ChainError(f"step {a}->{b} is not a mesh edge")

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "is_loop": self.is_loop}


@dataclass(frozen=True)
class ChainSet:
    chains: tuple[SeamChain, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))

    def __len__(self):
        return len(self.chains)

    def __iter__(self) -> Iterator[SeamChain]:
        return iter(self.chains)

    @property
    def loops(self) -> list[SeamChain]:
        return [c for c in self.chains if c.is_loop]

    @property
    def open_chains(self) -> list[SeamChain]:
        return [c for c in self.chains if not c.is_loop]

    def validate(self, adjacency: AdjacencyTable) -> None:
        for c in self.chains:
            c.validate(adjacency)
        chains_to_edges(self)

    def to_json(self) -> dict:
        return {"schema": CHAINS_SCHEMA, "chains": [c.to_json() for c in self.chains]}

    @classmethod
    def from_json(cls, data: dict) -> "ChainSet":
        chains = []
        for entry in data["chains"]:
            chain = SeamChain(tuple(entry["vertices"]))
            if "is_loop" in entry and bool(entry["is_loop"]) != chain.is_loop:
                raise ChainError(f"is_loop flag disagrees with vertices {chain.vertices}")
            chains.append(chain)
        return cls(tuple(chains))


@dataclass(frozen=True)
class TokenSequence:
    """Token stream stored as candidate ids."""

    ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(t) for t in self.ids))

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __getitem__(self, k):
        return self.ids[k]

    def to_json(self) -> dict:
        out = []
        for t in self.ids:
            if t == EOC:
                out.append({"t": "eoc"})
            elif t == EOS:
                out.append({"t": "eos"})
            else:
                out.append({"t": "v", "i": id_vertex(t)})
        return {"schema": TOKENS_SCHEMA, "tokens": out}

    @classmethod
    def from_json(cls, data: dict) -> "TokenSequence":
        ids = []
        for tok in data["tokens"]:
            kind = tok.get("t")
            if kind == "eoc":
                ids.append(EOC)
            elif kind == "eos":
                ids.append(EOS)
            elif kind == "v":
                ids.append(vertex_id(tok["i"]))
            else:
                raise MalformedTokensError(f"unknown token {tok!r}")
        return cls(tuple(ids))

    def __str__(self):
        names = {EOC: "EOC", EOS: "EOS"}
        return "[" + ",".join(names.get(t, f"V{id_vertex(t)}") for t in self.ids) + "]"


def extract_seams_from_uv(mesh: Mesh, tolerance: float = 1e-6,
                          adjacency: Optional[AdjacencyTable] = None) -> SeamEdgeSet:
    """Interior edges across which the two faces disagree on an endpoint's UV."""
    if not mesh.has_uvs:
        raise MissingUVError("mesh has no texture coordinates")
    adjacency = adjacency or mesh.adjacency
    faces = mesh.faces
    uvs = mesh.corner_uvs

    def corner_uv(f: int, v: int) -> np.ndarray:
        k = int(np.flatnonzero(faces[f] == v)[0])
        return uvs[3 * f + k]

    seams = []
    for (a, b), fs in adjacency.edge_faces.items():
        if len(fs) != 2:
            continue
        f, g = fs
        for v in (a, b):
            if np.linalg.norm(corner_uv(f, v) - corner_uv(g, v)) > tolerance:
                seams.append((a, b))
                break
    return SeamEdgeSet(frozenset(seams))


def trace_chains(mesh: Optional[Mesh], seams: SeamEdgeSet | Iterable[Edge]) -> ChainSet:
    """Decompose a seam edge set into maximal chains split at junctions.

    ``mesh`` is only used to check that seams are mesh edges and may be None.
    """
    edges = seams.edges if isinstance(seams, SeamEdgeSet) else {edge_key(*e) for e in seams}
    if mesh is not None:
        SeamEdgeSet(frozenset(edges)).validate(mesh.adjacency)
    nbrs: dict[int, list[int]] = {}
    for a, b in edges:
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    for v in nbrs:
        nbrs[v].sort()
    used: set[Edge] = set()

    def walk(start: int, first: int) -> list[int]:
        path = [start, first]
        used.add(edge_key(start, first))
        while len(nbrs[path[-1]]) == 2 and path[-1] != start:
            cur = path[-1]
            nxt = next((n for n in nbrs[cur] if edge_key(cur, n) not in used), None)
            if nxt is None:
                break
            used.add(edge_key(cur, nxt))
            path.append(nxt)
        return path

    chains = []
    for v in sorted(nbrs):
        if len(nbrs[v]) == 2:
            continue
        for n in nbrs[v]:
            if edge_key(v, n) in used:
                continue
            path = walk(v, n)
            if path[0] != path[-1] and path[-1] < path[0]:
                path.reverse()
            chains.append(SeamChain(tuple(path)))
    # what remains are components where every vertex has seam-degree 2
    for v in sorted(nbrs):
        for n in nbrs[v]:
            if edge_key(v, n) not in used:
                chains.append(SeamChain(tuple(walk(v, n))))
                break
    chains.sort(key=lambda c: (min(c.vertices), c.vertices))
    return ChainSet(tuple(chains))


def chains_to_edges(chains: ChainSet | Iterable[SeamChain]) -> SeamEdgeSet:
    seen: set[Edge] = set()
    for chain in chains:
        for e in chain.edges():
            if e in seen:
                raise DuplicateEdgeError(f"edge {e} appears in more than one chain position")
            seen.add(e)
    return SeamEdgeSet(frozenset(seen))


def tokenize(chains: ChainSet | Iterable[SeamChain]) -> TokenSequence:
    ids: list[int] = []
    for chain in chains:
        ids.extend(vertex_id(v) for v in chain.vertices)
        ids.append(EOC)
    ids.append(EOS)
    return TokenSequence(tuple(ids))


def detokenize(tokens: TokenSequence | Iterable[int],
               adjacency: Optional[AdjacencyTable] = None) -> ChainSet:
    """Inverse of :func:`tokenize`.

    A chain may be closed by EOC or directly by the final EOS.  With
    ``adjacency`` given, consecutive vertices must be mesh-adjacent.
    """
    ids = list(tokens.ids if isinstance(tokens, TokenSequence) else tokens)
    if not ids or ids[-1] != EOS:
        raise MalformedTokensError("sequence must end with EOS")
    if EOS in ids[:-1]:
        raise MalformedTokensError(f"EOS at position {ids.index(EOS)} before the end")
    chains: list[SeamChain] = []
    current: list[int] = []
    for pos, t in enumerate(ids):
        if t < 0:
            raise MalformedTokensError(f"negative candidate id {t} at position {pos}")
        if is_vertex(t):
            v = id_vertex(t)
            if adjacency is not None:
                if v >= adjacency.n_vertices:
                    raise MalformedTokensError(f"vertex {v} at position {pos} out of range")
                if current and not adjacency.has_edge(current[-1], v):
                    raise MalformedTokensError(
                        f"vertices {current[-1]} and {v} at position {pos} are not adjacent")
            current.append(v)
            continue
        if t == EOS and not current and (pos == 0 or ids[pos - 1] == EOC):
            break
        if len(current) < 2:
            raise MalformedTokensError(f"empty chain closed at position {pos}")
        try:
            chains.append(SeamChain(tuple(current)))
        except ChainError as exc:
            raise MalformedTokensError(f"invalid chain closed at position {pos}: {exc}") from None
        current = []
    return ChainSet(tuple(chains))
