"""Run orchestration: the interleaved loop of per-step multi-view texture
assembly and texture-guided noise resampling.

Each denoising step t does two sweeps over the fixed camera set:

1. assemble_step — sequentially denoise every view, decoding each clean-
   latent estimate and baking it into a fresh texture map. The first view
   is the reference: its attention Key/Value state is exported and injected
   into every later view. Later views are first blended: regions whose
   texels are already covered get the noised, encoded render of the partial
   texture; first-observed regions keep their own noisy latent.
2. resample_step — recompute every view's noise estimate as a two-condition
   CFG blend of the backend prediction and the noise map implied by the
   completed texture, then take the deterministic DDIM step to t-1.

The texture is rebuilt from scratch every step from that step's estimates,
so the resampling guidance always reflects current content everywhere.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import CodecSpec, build_codec
from .denoiser import (
    DenoiseRequest,
    DenoiserBackend,
    GaussianBackend,
    PromptCondition,
    RemoteBackend,
    ToyAttentionBackend,
)
from .geometry import (
    RasterMap,
    TextureMap,
    depth_image,
    downsample_mask,
    first_obs_mask,
    inverse_render,
    load_mesh,
    rasterize,
    render,
    sample_views,
    symmetric_view_order,
)
from .guidance import (
    GuidanceWeights,
    cfg_combine,
    disentangle_texture_condition,
    multi_cond_combine,
    texture_noise,
)
from .schedule import ConfigError, NoiseSchedule, SamplerConfig, build_schedule

ENGINE_VERSION = "texloom/0.1.0"
GRAZING_MIN_COS = 0.2
BACKGROUND = (0.5, 0.5, 0.5)


class PipelineError(RuntimeError):
    """A module failure, annotated with step/view context."""


def blend_latents(x_t: np.ndarray, noised_render: np.ndarray, fresh_mask: np.ndarray) -> np.ndarray:
    """Latent-space inpainting blend: first-observed cells keep the view's
    own noisy latent bitwise; already-observed cells take the noised render
    bitwise."""
    return np.where(fresh_mask[..., None], x_t, noised_render)


@dataclass
class RunConfig:
    prompt: str = "a textured object"
    mesh: str = ""
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    omega: float = 7.5
    n_azimuth: int = 8
    add_top: bool = True
    tex_size: int = 128
    img_size: int = 64
    codec: CodecSpec = field(default_factory=lambda: CodecSpec(2, 4, "toy-lossy"))
    backend: str = "toyattn"
    endpoint: str | None = None
    radius: float = 2.2
    fov: float = 50.0
    no_attention: bool = False
    omega1_zero: bool = False
    omega2_zero: bool = False
    edit_mode: bool = False
    out_dir: str | None = None
    debug_renders: bool = False
    max_inflight: int = 4

    def validate(self) -> None:
        self.sampler.validate()
        self.codec.validate()
        if not self.mesh:
            raise ConfigError("a mesh path is required")
        if self.omega == 0.0:
            raise ConfigError("guidance scale omega must be nonzero")
        if self.tex_size < 1 or self.img_size < 1:
            raise ConfigError("tex_size and img_size must be positive")
        if self.img_size % self.codec.factor:
            raise ConfigError(
                f"img_size {self.img_size} not divisible by codec factor {self.codec.factor}"
            )
        if self.n_azimuth < 1:
            raise ConfigError("need at least one azimuth view")
        if self.omega1_zero and self.omega2_zero:
            raise ConfigError("omega1_zero and omega2_zero are mutually exclusive")
        if self.backend not in ("gaussian", "toyattn", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("remote backend requires an endpoint")

    def guidance_weights(self) -> GuidanceWeights:
        if self.omega1_zero:
            return GuidanceWeights.texture_only(self.omega)
        if self.omega2_zero:
            return GuidanceWeights.text_only(self.omega)
        return GuidanceWeights.linear_decay(self.omega, self.sampler.total_steps)


@dataclass
class RunState:
    latents: list[np.ndarray]
    rasters: list[RasterMap]
    depths: list[np.ndarray]
    texture: TextureMap | None
    step: int
    rng: np.random.Generator
    denoise_outputs: list = field(default_factory=list)


@dataclass
class RunResult:
    texture: TextureMap
    latents: list[np.ndarray]
    manifest: dict
    out_dir: Path | None


class TexturePipeline:
    """Holds the per-run fixed context (mesh, cameras, modules) and drives
    the per-step sweeps over a RunState."""

    def __init__(self, config: RunConfig, backend: DenoiserBackend | None = None, mesh=None):
        config.validate()
        self.config = config
        self.sched = build_schedule(config.sampler)
        self.weights = config.guidance_weights()
        self.prompt = PromptCondition(config.prompt)

        if mesh is None:
            mesh = load_mesh(config.mesh).normalized()
        self.mesh = mesh

        all_views = sample_views(
            config.n_azimuth, config.add_top, config.radius, config.fov, config.img_size
        )
        order = symmetric_view_order(config.n_azimuth, config.add_top)
        self.views = [all_views[i] for i in order]
        self.rasters = [rasterize(mesh, v, config.tex_size) for v in self.views]
        self.depths = [depth_image(r) for r in self.rasters]

        self.backend = backend if backend is not None else self._build_backend()
        client = self.backend if config.codec.kind == "remote" else None
        self.codec = build_codec(config.codec, client=client)
        self.use_attention = not config.no_attention and self.backend.supports_kv

    def _build_backend(self) -> DenoiserBackend:
        cfg = self.config
        if cfg.backend == "gaussian":
            return GaussianBackend(self.sched)
        if cfg.backend == "toyattn":
            return ToyAttentionBackend(self.sched, channels=cfg.codec.channels)
        return RemoteBackend(cfg.endpoint, self.sched, max_inflight=cfg.max_inflight)

    @property
    def n_views(self) -> int:
        return len(self.views)

    def latent_shape(self) -> tuple[int, int, int]:
        f = self.config.codec.factor
        return (self.config.img_size // f, self.config.img_size // f, self.config.codec.channels)

    def init_state(self) -> RunState:
        rng = np.random.default_rng(self.config.sampler.seed)
        shape = self.latent_shape()
        latents = [rng.standard_normal(shape) for _ in range(self.n_views)]
        return RunState(
            latents=latents,
            rasters=self.rasters,
            depths=self.depths,
            texture=None,
            step=self.sched.total_steps,
            rng=rng,
            denoise_outputs=[None] * self.n_views,
        )

    # -- the two per-step sweeps -------------------------------------------

    def assemble_step(self, state: RunState) -> TextureMap:
        """One multi-view sweep at step t, producing the complete texture."""
        t = state.step
        cfg = self.config
        tex = TextureMap(cfg.tex_size, BACKGROUND)
        decoded: list[np.ndarray] = []
        kv_ref = None

        for idx in range(self.n_views):
            try:
                x = state.latents[idx]
                if idx == 0:
                    out = self.backend.denoise(
                        DenoiseRequest(
                            latent=x,
                            t=t,
                            prompt=self.prompt,
                            depth=self.depths[idx],
                            want_kv=self.use_attention,
                            edit_edges=cfg.edit_mode,
                        )
                    )
                    kv_ref = out.kv if self.use_attention else None
                else:
                    partial = render(tex, self.rasters[idx], BACKGROUND)
                    encoded = self.codec.encode(partial)
                    mask = first_obs_mask(self.rasters[idx], tex)
                    m_lat = downsample_mask(mask, cfg.codec.factor)
                    eps_blend = state.rng.standard_normal(encoded.shape)
                    noised = self.sched.add_noise(encoded, eps_blend, t)
                    x = blend_latents(x, noised, m_lat)
                    state.latents[idx] = x
                    out = self.backend.denoise(
                        DenoiseRequest(
                            latent=x,
                            t=t,
                            prompt=self.prompt,
                            depth=self.depths[idx],
                            kv_inject=kv_ref,
                            edit_edges=cfg.edit_mode,
                        )
                    )
                state.denoise_outputs[idx] = out
                eps = cfg_combine(out, cfg.omega)
                x0 = self.sched.predict_x0(x, eps, t)
                img = np.clip(self.codec.decode(x0), 0.0, 1.0)
                decoded.append(img)
                inverse_render(img, self.rasters[idx], tex, idx, min_cos=GRAZING_MIN_COS)
            except Exception as exc:
                raise PipelineError(f"assembly failed at step {t}, view {idx}: {exc}") from exc

        # Texels only ever seen at grazing angles: fill from whichever view
        # saw them first rather than leaving holes.
        for idx in range(self.n_views):
            inverse_render(decoded[idx], self.rasters[idx], tex, idx, min_cos=0.0)

        state.texture = tex
        return tex

    def resample_step(self, state: RunState, texture: TextureMap) -> None:
        """Recompute each view's noise estimate under texture guidance and
        advance every latent to step t-1."""
        t = state.step
        t_next = t - 1

        def one_view(idx: int) -> np.ndarray:
            x = state.latents[idx]
            img = render(texture, self.rasters[idx], BACKGROUND)
            encoded = self.codec.encode(img)
            eps_hat_tex = texture_noise(x, encoded, t, self.sched)
            out = state.denoise_outputs[idx]
            eps_tex_cond = disentangle_texture_condition(
                eps_hat_tex, out.eps_uncond, self.config.omega
            )
            eps_m = multi_cond_combine(out, eps_tex_cond, self.weights, t)
            x0 = self.sched.predict_x0(x, eps_m, t)
            return self.sched.ddim_step(x, x0, eps_m, t, t_next)

        try:
            if self.config.max_inflight > 1 and self.n_views > 1:
                with ThreadPoolExecutor(max_workers=self.config.max_inflight) as pool:
                    state.latents = list(pool.map(one_view, range(self.n_views)))
            else:
                state.latents = [one_view(i) for i in range(self.n_views)]
        except Exception as exc:
            raise PipelineError(f"resampling failed at step {t}: {exc}") from exc
        state.step = t_next

    # -- whole run ----------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        out_dir = Path(cfg.out_dir) if cfg.out_dir else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)

        state = self.init_state()
        wall_times: list[float] = []
        coverage: list[float] = []
        manifest = {
            "version": ENGINE_VERSION,
            "status": "running",
            "config": config_echo(cfg),
            "config_sha256": config_hash(cfg),
            "seed": cfg.sampler.seed,
        }
        try:
            for t in self.sched.steps():
                started = time.perf_counter()
                texture = self.assemble_step(state)
                self.resample_step(state, texture)
                wall_times.append(time.perf_counter() - started)
                coverage.append(texture.coverage_fraction())
                if out_dir and cfg.debug_renders:
                    self._write_debug(out_dir, t, texture)
        except Exception as exc:
            manifest.update(
                status="FAILED",
                error=str(exc),
                step_wall_times_s=wall_times,
                step_coverage=coverage,
            )
            if out_dir:
                _write_json(out_dir / "manifest.json", manifest)
            raise

        texture = state.texture
        manifest.update(
            status="ok",
            step_wall_times_s=wall_times,
            step_coverage=coverage,
            final_texture_sha256=texture_hash(texture),
            final_coverage_fraction=texture.coverage_fraction(),
        )
        if out_dir:
            save_texture_png(out_dir / "texture.png", texture)
            save_coverage_png(out_dir / "coverage.png", texture)
            _write_json(out_dir / "manifest.json", manifest)
        return RunResult(texture=texture, latents=state.latents, manifest=manifest, out_dir=out_dir)

    def _write_debug(self, out_dir: Path, t: int, texture: TextureMap) -> None:
        step_dir = out_dir / "debug" / f"step_{t:03d}"
        step_dir.mkdir(parents=True, exist_ok=True)
        for idx in range(self.n_views):
            img = render(texture, self.rasters[idx], BACKGROUND)
            save_rgb_png(step_dir / f"view_{idx}.png", img)


# -- artifacts ---------------------------------------------------------------


def quantize(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def save_rgb_png(path: Path, img: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(quantize(img), mode="RGB").save(path)


def save_texture_png(path: Path, texture: TextureMap) -> None:
    save_rgb_png(path, texture.texels)


def save_coverage_png(path: Path, texture: TextureMap) -> None:
    from PIL import Image

    Image.fromarray((texture.covered * 255).astype(np.uint8), mode="L").save(path)


def texture_hash(texture: TextureMap) -> str:
    h = hashlib.sha256()
    h.update(quantize(texture.texels).tobytes())
    h.update(texture.covered.tobytes())
    return h.hexdigest()


def config_echo(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_echo(cfg), sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
