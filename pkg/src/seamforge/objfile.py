"""Wavefront OBJ reading and writing (``v``, ``vt``, ``f`` records only)."""

from __future__ import annotations

import io
import os
from typing import Optional

import numpy as np

from .errors import IndexOutOfRangeError, ObjParseError
from .mesh import Mesh

_IGNORED = {"vn", "vp", "o", "g", "s", "usemtl", "mtllib", "l", "p"}


def _resolve(raw: str, count: int, kind: str, lineno: int) -> int:
    try:
        idx = int(raw)
    except ValueError:
        raise ObjParseError(f"bad {kind} index {raw!r}", lineno) from None
    if idx == 0:
        raise IndexOutOfRangeError(f"{kind} index 0 is invalid (OBJ is 1-based)", lineno)
    resolved = idx - 1 if idx > 0 else count + idx
    if not 0 <= resolved < count:
        raise IndexOutOfRangeError(f"{kind} index {idx} out of range ({count} defined)", lineno)
    return resolved


def parse_obj(text: str) -> Mesh:
    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    corner_uvs: list[Optional[int]] = []

    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "v":
            try:
                positions.append([float(x) for x in rest[:3]])
            except ValueError:
                raise ObjParseError("bad vertex coordinates", lineno) from None
            if len(positions[-1]) != 3:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
        elif head == "vt":
            try:
                uv = [float(x) for x in rest[:2]]
            except ValueError:
                raise ObjParseError("bad texture coordinates", lineno) from None
            if not uv:
                raise ObjParseError("vt needs at least one coordinate", lineno)
            texcoords.append(uv + [0.0] * (2 - len(uv)))
        elif head == "f":
            if len(rest) < 3:
                raise ObjParseError("face needs at least 3 vertices", lineno)
            vids, tids = [], []
            for corner in rest:
                parts = corner.split("/")
                vids.append(_resolve(parts[0], len(positions), "vertex", lineno))
                if len(parts) > 1 and parts[1]:
                    tids.append(_resolve(parts[1], len(texcoords), "texcoord", lineno))
                else:
                    tids.append(None)
            if len(set(vids)) != len(vids):
                raise ObjParseError("face repeats a vertex", lineno)
            for k in range(1, len(vids) - 1):
                faces.append((vids[0], vids[k], vids[k + 1]))
                corner_uvs.extend((tids[0], tids[k], tids[k + 1]))
        elif head in _IGNORED:
            continue
        else:
            raise ObjParseError(f"unknown record {head!r}", lineno)

    has_uv = [t is not None for t in corner_uvs]
    uvs = None
    if faces and all(has_uv):
        uvs = np.array([texcoords[t] for t in corner_uvs], dtype=np.float64)
    elif any(has_uv):
        raise ObjParseError("some faces carry texture coordinates and others do not")
    return Mesh(np.array(positions, dtype=np.float64).reshape(-1, 3),
                np.array(faces, dtype=np.int64).reshape(-1, 3), uvs)


def load_obj(path: str | os.PathLike) -> Mesh:
    with open(path, encoding="utf-8") as fh:
        return parse_obj(fh.read())


def dumps_obj(mesh: Mesh, corner_uvs: Optional[np.ndarray] = None) -> str:
    """Serialize; one ``vt`` per face corner when UVs are present."""
    uvs = mesh.corner_uvs if corner_uvs is None else np.asarray(corner_uvs, dtype=np.float64)
    out = io.StringIO()
    for x, y, z in mesh.positions.tolist():
        out.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
    if uvs is not None:
        for u, v in uvs.tolist():
            out.write(f"vt {u:.9g} {v:.9g}\n")
        for f, (a, b, c) in enumerate(mesh.faces.tolist()):
            t = 3 * f + 1
            out.write(f"f {a + 1}/{t} {b + 1}/{t + 1} {c + 1}/{t + 2}\n")
    else:
        for a, b, c in mesh.faces.tolist():
            out.write(f"f {a + 1} {b + 1} {c + 1}\n")
    return out.getvalue()


def save_obj(mesh: Mesh, path: str | os.PathLike, corner_uvs: Optional[np.ndarray] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_obj(mesh, corner_uvs))
