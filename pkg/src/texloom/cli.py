"""Command-line front end.

Subcommands:

* ``generate`` — synthesize a texture for a mesh from a text prompt.
* ``edit``     — same pipeline with the edge-conditioning flag forwarded to
                 the backend (identity-preserving texture editing).
* ``inspect``  — render an existing texture PNG onto a mesh from the nine
                 canonical views for visual QA.
* ``selftest`` — run the built-in invariant suites.

Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 backend
unreachable, 4 run failure.

Settings may come from a config file (flat ``key = value`` lines under
``[section]`` headers mirroring the module names); command-line flags win
over file values.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .codec import CodecSpec
from .denoiser import BackendUnavailable, RemoteBackend
from .geometry import TextureMap, load_mesh, rasterize, render, sample_views
from .pipeline import BACKGROUND, RunConfig, TexturePipeline, save_rgb_png
from .schedule import ConfigError, SamplerConfig
from .selftest import run_selftest

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_RUN = 4

# (section, key) -> (RunConfig attribute path, parser)
_CONFIG_KEYS = {
    ("schedule", "steps"): ("sampler.total_steps", int),
    ("schedule", "kind"): ("sampler.schedule_kind", str),
    ("schedule", "seed"): ("sampler.seed", int),
    ("guidance", "omega"): ("omega", float),
    ("guidance", "omega1_zero"): ("omega1_zero", bool),
    ("guidance", "omega2_zero"): ("omega2_zero", bool),
    ("geometry", "views"): ("n_azimuth", int),
    ("geometry", "top"): ("add_top", bool),
    ("geometry", "tex_size"): ("tex_size", int),
    ("geometry", "img_size"): ("img_size", int),
    ("geometry", "radius"): ("radius", float),
    ("geometry", "fov"): ("fov", float),
    ("codec", "kind"): ("codec.kind", str),
    ("codec", "factor"): ("codec.factor", int),
    ("codec", "channels"): ("codec.channels", int),
    ("denoiser", "backend"): ("backend", str),
    ("denoiser", "endpoint"): ("endpoint", str),
    ("denoiser", "no_attention"): ("no_attention", bool),
    ("pipeline", "prompt"): ("prompt", str),
    ("pipeline", "mesh"): ("mesh", str),
    ("pipeline", "out"): ("out_dir", str),
    ("pipeline", "debug_renders"): ("debug_renders", bool),
    ("pipeline", "edit"): ("edit_mode", bool),
    ("pipeline", "max_inflight"): ("max_inflight", int),
}


def _parse_config_file(path: str) -> dict[str, object]:
    """Flat key=value lines under [section] headers; unknown keys rejected."""
    values: dict[str, object] = {}
    section = ""
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip().strip('"').strip("'")
        if (section, key) not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key [{section}] {key}")
        attr, cast = _CONFIG_KEYS[(section, key)]
        if cast is bool:
            if val.lower() not in ("true", "false", "1", "0"):
                raise ConfigError(f"{path}:{lineno}: {key} must be true/false")
            values[attr] = val.lower() in ("true", "1")
        else:
            try:
                values[attr] = cast(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def _set_path(cfg: RunConfig, attr: str, value: object) -> None:
    if "." in attr:
        head, tail = attr.split(".", 1)
        target = getattr(cfg, head)
        fields = dict(
            (f, getattr(target, f)) for f in target.__dataclass_fields__  # type: ignore[attr-defined]
        )
        fields[tail] = value
        setattr(cfg, head, type(target)(**fields))
    else:
        setattr(cfg, attr, value)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texloom", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="config file (key = value under [section] headers)")
        p.add_argument("--mesh", help="triangulated OBJ with UVs")
        p.add_argument("--prompt", help="text prompt")
        p.add_argument("--steps", type=int, help="denoising steps (default 40)")
        p.add_argument("--views", type=int, help="azimuth view count (default 8)")
        p.add_argument("--no-top", action="store_true", help="skip the extra top view")
        p.add_argument("--omega", type=float, help="total guidance scale (default 7.5)")
        p.add_argument("--omega1-zero", action="store_true", help="ablation: zero text weight")
        p.add_argument("--omega2-zero", action="store_true", help="ablation: zero texture weight")
        p.add_argument("--no-attention", action="store_true", help="ablation: no KV propagation")
        p.add_argument("--backend", choices=["gaussian", "toyattn", "remote"])
        p.add_argument("--endpoint", help="remote backend URL (implies --backend remote)")
        p.add_argument("--seed", type=int, help="RNG seed (default 0)")
        p.add_argument("--tex-size", type=int, help="texture resolution")
        p.add_argument("--img-size", type=int, help="per-view image resolution")
        p.add_argument("--out", help="artifact directory")
        p.add_argument("--debug-renders", action="store_true", help="write per-step view renders")
        p.add_argument("--edit", action="store_true", help="forward the edge-conditioning flag")

    gen = sub.add_parser("generate", help="synthesize a texture")
    add_run_flags(gen)
    edit = sub.add_parser("edit", help="texture editing (edge-conditioned generation)")
    add_run_flags(edit)

    insp = sub.add_parser("inspect", help="render an existing texture from canonical views")
    insp.add_argument("--mesh", required=True)
    insp.add_argument("--texture", required=True, help="texture PNG")
    insp.add_argument("--out", required=True)
    insp.add_argument("--img-size", type=int, default=512)

    sub.add_parser("selftest", help="run built-in invariant suites")
    return parser


def parse_and_validate(argv: list[str]) -> RunConfig:
    """Resolve a generate/edit invocation to a validated RunConfig."""
    args = build_arg_parser().parse_args(argv)
    if args.command not in ("generate", "edit"):
        raise ConfigError(f"parse_and_validate handles generate/edit, got {args.command}")
    return _resolve_run_config(args)


def _resolve_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for attr, value in _parse_config_file(args.config).items():
            _set_path(cfg, attr, value)

    flag_map = [
        ("mesh", "mesh"),
        ("prompt", "prompt"),
        ("steps", "sampler.total_steps"),
        ("views", "n_azimuth"),
        ("omega", "omega"),
        ("backend", "backend"),
        ("endpoint", "endpoint"),
        ("seed", "sampler.seed"),
        ("tex_size", "tex_size"),
        ("img_size", "img_size"),
        ("out", "out_dir"),
    ]
    for flag, attr in flag_map:
        value = getattr(args, flag)
        if value is not None:
            _set_path(cfg, attr, value)
    if args.no_top:
        cfg.add_top = False
    if args.omega1_zero:
        cfg.omega1_zero = True
    if args.omega2_zero:
        cfg.omega2_zero = True
    if args.no_attention:
        cfg.no_attention = True
    if args.debug_renders:
        cfg.debug_renders = True
    if args.edit or args.command == "edit":
        cfg.edit_mode = True

    if cfg.endpoint and args.backend is None and "backend" not in _file_set(args):
        cfg.backend = "remote"
    if cfg.backend == "remote" and cfg.codec.kind != "remote" and args.config is None:
        cfg.codec = CodecSpec(8, 4, "remote")
        if args.tex_size is None:
            cfg.tex_size = 1024
        if args.img_size is None:
            cfg.img_size = 512

    # Flag-level checks so usage errors name the offending flag.
    if cfg.sampler.total_steps < 1:
        raise ConfigError("--steps must be >= 1")
    if cfg.n_azimuth < 1:
        raise ConfigError("--views must be >= 1")
    if cfg.omega == 0.0:
        raise ConfigError("--omega must be nonzero")
    if cfg.tex_size < 1:
        raise ConfigError("--tex-size must be positive")
    if cfg.img_size < 1:
        raise ConfigError("--img-size must be positive")
    if not cfg.mesh:
        raise ConfigError("--mesh is required")
    cfg.validate()
    return cfg


def _file_set(args: argparse.Namespace) -> set[str]:
    if not args.config:
        return set()
    return {attr for attr in _parse_config_file(args.config)}


def _cmd_generate(args: argparse.Namespace) -> int:
    try:
        cfg = _resolve_run_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        pipeline = TexturePipeline(cfg)
        if isinstance(pipeline.backend, RemoteBackend):
            pipeline.backend.health()
        result = pipeline.run()
    except BackendUnavailable as exc:
        print(f"backend unreachable: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except Exception as exc:
        if isinstance(getattr(exc, "__cause__", None), BackendUnavailable):
            print(f"backend unreachable: {exc}", file=sys.stderr)
            return EXIT_BACKEND
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    coverage = result.manifest["final_coverage_fraction"]
    print(f"texture complete: coverage {coverage:.1%}", end="")
    print(f", artifacts in {result.out_dir}" if result.out_dir else "")
    return EXIT_OK


def _cmd_inspect(args: argparse.Namespace) -> int:
    from PIL import Image

    try:
        mesh = load_mesh(args.mesh).normalized()
        img = np.asarray(Image.open(args.texture).convert("RGB"), dtype=np.float64) / 255.0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN
    if img.shape[0] != img.shape[1]:
        print("error: --texture must be square", file=sys.stderr)
        return EXIT_USAGE
    tex = TextureMap(img.shape[0])
    tex.texels = img
    tex.covered[:] = True
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, pose in enumerate(sample_views(8, True, resolution=args.img_size)):
        raster = rasterize(mesh, pose, tex.resolution)
        save_rgb_png(out / f"view_{idx}.png", render(tex, raster, BACKGROUND))
    print(f"wrote 9 views to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "selftest":
        return run_selftest()
    if args.command == "inspect":
        return _cmd_inspect(args)
    return _cmd_generate(args)


if __name__ == "__main__":
    sys.exit(main())
