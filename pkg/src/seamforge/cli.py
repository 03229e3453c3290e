"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 I/O error.  Failures print a JSON
object ``{"error": "io" | "domain", "kind": ..., "type": ..., "message": ...}``
to stderr.  ``SEAMFORGE_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .atlas import build_atlas, charts_to_json, cut_mesh, layout_svg, seams_ply
from .atlas.chart import auto_cut
from .atlas.export import atlas_mesh
from .errors import SeamforgeError
from .mesh import Mesh
from .objfile import dumps_obj, load_obj
from .ordering import OrderedChains, canonical_order
from .seams import (CHAINS_SCHEMA, SEAMS_SCHEMA, TOKENS_SCHEMA, ChainSet, SeamEdgeSet, TokenSequence,
                    chains_to_edges, extract_seams_from_uv, tokenize, trace_chains)
from .traversal import DecodeConfig, decode, divide_and_conquer_decode, heuristic_scorer, replay_scorer

log = logging.getLogger("seamforge")

PIPELINE_SCHEMA = "seamforge.pipeline/1"


@dataclass(frozen=True)
class PipelineConfig:
    tolerance: float = 1e-6
    temperature: float = 0.1
    max_len: int = 400
    seed: int = 0
    flattener: str = "tutte"
    min_faces: int = 64
    samples_per_loop: int = 128
    allow_empty: bool = False
    auto_cut: bool = True
    margin: float = 0.01

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if self.flattener not in ("tutte", "lscm"):
            raise ValueError(f"unknown flattener {self.flattener!r}")
        if self.min_faces < 1 or self.samples_per_loop < 3:
            raise ValueError("min_faces must be >= 1 and samples_per_loop >= 3")
        DecodeConfig(self.temperature, self.max_len, self.seed, allow_empty=self.allow_empty)

    @classmethod
    def from_json(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known - {"schema"})
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {unknown}")
        return cls(**{k: v for k, v in data.items() if k in known})

    def decode_config(self, greedy: bool = False) -> DecodeConfig:
        return DecodeConfig(self.temperature, self.max_len, self.seed, greedy, self.allow_empty)


# io helpers -------------------------------------------------------------------

def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(text: str | bytes, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if isinstance(text, str) else text.decode())
        return
    path = Path(out)
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text, encoding="utf-8", newline="\n")


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_chains(path) -> ChainSet:
    data = _read_json(path)
    if data.get("schema") != CHAINS_SCHEMA:
        raise SeamforgeError(f"{path}: expected schema {CHAINS_SCHEMA}, got {data.get('schema')!r}")
    return ChainSet.from_json(data)


def load_seams(path, mesh: Optional[Mesh] = None) -> SeamEdgeSet:
    """Seam edges from a seams, chains or tokens JSON file (or, for ``uv``, from the mesh's UVs)."""
    if str(path) == "uv":
        if mesh is None:
            raise SeamforgeError("'uv' seams need a mesh")
        return extract_seams_from_uv(mesh)
    data = _read_json(path)
    schema = data.get("schema")
    if schema == SEAMS_SCHEMA:
        return SeamEdgeSet.from_json(data)
    if schema == CHAINS_SCHEMA:
        return chains_to_edges(ChainSet.from_json(data))
    if schema == TOKENS_SCHEMA:
        from .seams import detokenize
        return chains_to_edges(detokenize(TokenSequence.from_json(data)))
    raise SeamforgeError(f"{path}: unrecognized schema {schema!r}")


def _chains_of(path, mesh: Mesh) -> ChainSet:
    if str(path) == "uv":
        return trace_chains(mesh, extract_seams_from_uv(mesh))
    data = _read_json(path)
    if data.get("schema") == SEAMS_SCHEMA:
        return trace_chains(mesh, SeamEdgeSet.from_json(data))
    return load_chains(path)


def _scorer_factory(args, mesh: Mesh):
    if args.scorer == "heuristic":
        return heuristic_scorer
    if args.scorer == "replay":
        if not args.target:
            raise SeamforgeError("--scorer replay needs --target")
        target = TokenSequence.from_json(_read_json(args.target))
        return lambda m: replay_scorer(target)
    if args.scorer == "model":
        if not args.weights:
            raise SeamforgeError("--scorer model needs --weights")
        from .neural import ModelScorer, load_weights
        model = load_weights(args.weights)
        return lambda m: ModelScorer(model, m, seed=args.seed)
    raise SeamforgeError(f"unknown scorer {args.scorer!r}")


def _decode_config(args) -> DecodeConfig:
    return DecodeConfig(args.temperature, args.max_len, args.seed, args.greedy, args.allow_empty)


# commands ---------------------------------------------------------------------

def cmd_extract(args) -> None:
    mesh = load_obj(args.mesh)
    _write(dumps_json(extract_seams_from_uv(mesh, args.tolerance).to_json()), args.output)


def cmd_chains(args) -> None:
    mesh = load_obj(args.mesh)
    _write(dumps_json(trace_chains(mesh, load_seams(args.seams, mesh)).to_json()), args.output)


def cmd_order(args) -> None:
    mesh = load_obj(args.mesh)
    _write(dumps_json(canonical_order(mesh, _chains_of(args.chains, mesh)).to_json()), args.output)


def cmd_tokenize(args) -> None:
    data = _read_json(args.chains)
    chains = OrderedChains.from_json(data).as_chainset() if "provenance" in data else ChainSet.from_json(data)
    _write(dumps_json(tokenize(chains).to_json()), args.output)


def cmd_decode(args) -> None:
    mesh = load_obj(args.mesh)
    factory = _scorer_factory(args, mesh)
    result = decode(mesh, factory(mesh), _decode_config(args))
    _write(dumps_json(result.to_json()), args.output)


def cmd_dc_decode(args) -> None:
    mesh = load_obj(args.mesh)
    result = divide_and_conquer_decode(mesh, _scorer_factory(args, mesh), _decode_config(args),
                                       args.min_faces, args.max_depth)
    _write(dumps_json(result.to_json()), args.output)


def cmd_cut(args) -> None:
    mesh = load_obj(args.mesh)
    seams = load_seams(args.seams, mesh)
    added = []
    if args.auto_cut:
        seams, added = auto_cut(mesh, seams)
    data = charts_to_json(cut_mesh(mesh, seams))
    data["auto_cut_edges"] = [list(e) for e in added]
    _write(dumps_json(data), args.output)


def _atlas(args):
    mesh = load_obj(args.mesh)
    return mesh, build_atlas(mesh, load_seams(args.seams, mesh), args.flattener, args.auto_cut, args.margin)


def cmd_flatten(args) -> None:
    mesh, atlas = _atlas(args)
    _write(dumps_obj(atlas_mesh(mesh, atlas.packed.charts)), args.output)


def cmd_metrics(args) -> None:
    mesh, atlas = _atlas(args)
    _write(dumps_json(atlas.report(mesh, args.samples_per_loop).to_json()), args.output)


def cmd_viz_uv(args) -> None:
    _, atlas = _atlas(args)
    _write(layout_svg(atlas.packed.charts), args.output)


def cmd_viz_seams(args) -> None:
    mesh = load_obj(args.mesh)
    _write(seams_ply(mesh, _chains_of(args.chains, mesh)), args.output)


def cmd_train_toy(args) -> None:
    from .neural import ModelConfig, TrainConfig, save_weights, train_toy
    from .synthetic import toy_corpus

    tc = TrainConfig.load(args.config) if args.config else TrainConfig()
    tc = replace(tc, seed=args.seed)
    if args.epochs is not None:
        tc = replace(tc, epochs=args.epochs)
    mc = ModelConfig.from_json(_read_json(args.model_config)) if args.model_config else ModelConfig.toy()
    data = [(m, canonical_order(m, c)) for m, c in toy_corpus(args.n_meshes, seed=args.seed)]
    result = train_toy(data, mc, tc)
    save_weights(result.model, args.output)
    if args.loss_csv:
        result.write_csv(args.loss_csv)
    summary = {"epochs": len(result.losses), "final_loss": round(result.losses[-1], 9),
               "first_loss": round(result.losses[0], 9), "weights": str(args.output)}
    sys.stdout.write(dumps_json(summary))


def pipeline_artifacts(mesh: Mesh, cfg: PipelineConfig, scorer_args) -> dict[str, str]:
    """Decode (or read UV seams), order, tokenize, cut, flatten, pack, measure and export.

    Returns file name -> text for every artifact.
    """
    if scorer_args.from_uv:
        chains = trace_chains(mesh, extract_seams_from_uv(mesh, cfg.tolerance))
        decoded = None
    else:
        factory = _scorer_factory(scorer_args, mesh)
        decoded = divide_and_conquer_decode(mesh, factory, cfg.decode_config(), cfg.min_faces)
        chains = decoded.chains
    ordered = canonical_order(mesh, chains)
    atlas = build_atlas(mesh, chains_to_edges(chains), cfg.flattener, cfg.auto_cut, cfg.margin)
    files = {
        "ordered.json": dumps_json(ordered.to_json()),
        "tokens.json": dumps_json(tokenize(ordered.as_chainset()).to_json()),
        "seams.json": dumps_json(atlas.seams.to_json()),
        "report.json": dumps_json(atlas.report(mesh, cfg.samples_per_loop).to_json()),
        "atlas.obj": dumps_obj(atlas_mesh(mesh, atlas.packed.charts)),
        "layout.svg": layout_svg(atlas.packed.charts),
        "seams.ply": seams_ply(mesh, ordered.sequence),
    }
    if decoded is not None:
        files["decoded.json"] = dumps_json(decoded.to_json())
    return files


def run_pipeline(mesh_path: str, out_dir: Optional[Path], cfg: PipelineConfig, scorer_args) -> dict:
    """Run the pipeline on one mesh; writes artifacts into ``out_dir`` unless it is None."""
    files = pipeline_artifacts(load_obj(mesh_path), cfg, scorer_args)
    manifest = {"schema": PIPELINE_SCHEMA, "version": __version__, "mesh": Path(mesh_path).name,
                "config": asdict(cfg), "files": sorted(files)}
    if out_dir is None:
        return {"manifest": manifest, "report": json.loads(files["report.json"])}
    out_dir.mkdir(parents=True, exist_ok=True)
    files["pipeline.json"] = dumps_json(manifest)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8", newline="\n")
    return manifest


def _pipeline_job(job):
    mesh_path, out_dir, cfg, scorer_args = job
    return run_pipeline(mesh_path, None if out_dir is None else Path(out_dir), cfg, scorer_args)


def cmd_pipeline(args) -> None:
    base = _read_json(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in ("tolerance", "temperature", "max_len", "flattener", "min_faces",
                                               "samples_per_loop", "margin") if getattr(args, k) is not None}
    if args.allow_empty:
        overrides["allow_empty"] = True
    if args.no_auto_cut:
        overrides["auto_cut"] = False
    cfg = PipelineConfig.from_json({**base, **overrides, "seed": args.seed})
    scorer_args = argparse.Namespace(scorer=args.scorer, target=args.target, weights=args.weights,
                                     seed=args.seed, from_uv=args.from_uv)
    out = Path(args.output) if args.output else None
    if out is None or len(args.meshes) == 1:
        jobs = [(m, out, cfg, scorer_args) for m in args.meshes]
    else:
        jobs = [(m, out / Path(m).stem, cfg, scorer_args) for m in args.meshes]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_pipeline_job, jobs))
    else:
        runs = [_pipeline_job(j) for j in jobs]
    sys.stdout.write(dumps_json({"schema": PIPELINE_SCHEMA, "runs": runs}))


# parser -----------------------------------------------------------------------

def _add_decode_flags(p) -> None:
    p.add_argument("--scorer", choices=("heuristic", "replay", "model"), default="heuristic")
    p.add_argument("--weights", help="weight file for --scorer model")
    p.add_argument("--target", help="tokens JSON for --scorer replay")


def _add_sampling_flags(p) -> None:
    p.add_argument("--temperature", type=float, default=0.1)
    p.add_argument("--max-len", type=int, default=400)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--allow-empty", action="store_true")


def _add_atlas_flags(p) -> None:
    p.add_argument("--flattener", choices=("tutte", "lscm"), default="tutte")
    p.add_argument("--auto-cut", action="store_true", help="cut non-disk charts open instead of failing")
    p.add_argument("--margin", type=float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seamforge", description="Mesh-native UV seam toolkit.")
    parser.add_argument("--version", action="version", version=f"seamforge {__version__}")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="overrides the global --seed")

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=func)
        return p

    p = command("extract", cmd_extract, "seam edges from per-corner UVs")
    p.add_argument("mesh")
    p.add_argument("--tolerance", type=float, default=1e-6)

    p = command("chains", cmd_chains, "trace seam edges into chains")
    p.add_argument("mesh")
    p.add_argument("seams", help="seams/chains/tokens JSON, or 'uv'")

    p = command("order", cmd_order, "canonical chain order")
    p.add_argument("mesh")
    p.add_argument("chains", help="chains or seams JSON, or 'uv'")

    p = command("tokenize", cmd_tokenize, "chains to token sequence")
    p.add_argument("chains")

    p = command("decode", cmd_decode, "sample seam chains with the masked decoder")
    p.add_argument("mesh")
    _add_decode_flags(p)
    _add_sampling_flags(p)

    p = command("dc-decode", cmd_dc_decode, "divide-and-conquer decoding")
    p.add_argument("mesh")
    _add_decode_flags(p)
    _add_sampling_flags(p)
    p.add_argument("--min-faces", type=int, default=64)
    p.add_argument("--max-depth", type=int, default=8)

    p = command("cut", cmd_cut, "charts induced by seams")
    p.add_argument("mesh")
    p.add_argument("seams")
    p.add_argument("--auto-cut", action="store_true")

    for name, func, text in (("flatten", cmd_flatten, "packed atlas OBJ"),
                             ("metrics", cmd_metrics, "atlas quality report"),
                             ("viz-uv", cmd_viz_uv, "SVG of the packed UV layout")):
        p = command(name, func, text)
        p.add_argument("mesh")
        p.add_argument("seams")
        _add_atlas_flags(p)
        if name == "metrics":
            p.add_argument("--samples-per-loop", type=int, default=128)

    p = command("viz-seams", cmd_viz_seams, "PLY with per-chain colored seam edges")
    p.add_argument("mesh")
    p.add_argument("chains")

    p = command("train-toy", cmd_train_toy, "train the toy model on synthetic meshes")
    p.add_argument("--config", help="key = value training config")
    p.add_argument("--model-config", help="model config JSON (default: toy sizes)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--n-meshes", type=int, default=20)
    p.add_argument("--loss-csv")

    p = command("pipeline", cmd_pipeline, "end-to-end: decode, order, cut, flatten, measure, export")
    p.add_argument("meshes", nargs="+")
    _add_decode_flags(p)
    p.add_argument("--from-uv", action="store_true", help="use the mesh's UV seams instead of decoding")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--no-auto-cut", action="store_true")
    p.add_argument("--allow-empty", action="store_true")
    for flag, typ in (("--tolerance", float), ("--temperature", float), ("--max-len", int),
                      ("--min-faces", int), ("--samples-per-loop", int), ("--margin", float)):
        p.add_argument(flag, type=typ)
    p.add_argument("--flattener", choices=("tutte", "lscm"))
    p.add_argument("--jobs", type=int, default=1, help="meshes processed in parallel")

    for name, action in sub.choices.items():
        if name == "pipeline":
            action.add_argument("-o", "--output", help="artifact directory (default: report JSON on stdout)")
        elif name == "train-toy":
            action.add_argument("-o", "--output", required=True, help="weight file")
        else:
            action.add_argument("-o", "--output", help="output file (default stdout)")
    return parser


def _error(kind: str, exc: BaseException) -> None:
    sys.stderr.write(json.dumps({"error": kind, "kind": getattr(exc, "kind", kind),
                                 "type": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("SEAMFORGE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        _error("domain", ValueError("--jobs must be >= 1"))
        return 1
    try:
        args.func(args)
    except SeamforgeError as exc:
        if exc.kind == "io":
            _error("io", exc)
            return 2
        _error("domain", exc)
        return 1
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        _error("io", exc)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        _error("domain", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
