"""Built-in invariant suites, runnable without pytest via the CLI.

Each suite is a callable returning (passed, detail). The registry order is
the report order; every suite appears exactly once in the report.
"""

from __future__ import annotations

import sys
from typing import Callable, TextIO

import numpy as np

from .codec import CodecSpec, ToyLossyCodec
from .denoiser import DenoiseRequest, GaussianBackend
from .geometry import CameraPose, TextureMap, inverse_render, rasterize, render, unit_quad
from .guidance import (
    DenoiseOutput,
    GuidanceWeights,
    cfg_combine,
    disentangle_texture_condition,
    multi_cond_combine,
    texture_noise,
)
from .schedule import SamplerConfig, build_schedule


def _schedule_suite() -> tuple[bool, str]:
    sched = build_schedule(SamplerConfig(total_steps=25))
    rng = np.random.default_rng(11)
    x0 = rng.standard_normal((4, 4, 3))
    for t in (1, 10, 25):
        eps = rng.standard_normal(x0.shape)
        back = sched.predict_x0(sched.add_noise(x0, eps, t), eps, t)
        if np.max(np.abs(back - x0)) > 1e-6:
            return False, f"noise round trip broke at t={t}"
    # Full chain with the true forward residual recovers x0.
    x = rng.standard_normal(x0.shape)
    for t in sched.steps():
        a = sched.alpha(t)
        eps = (x - np.sqrt(a) * x0) / np.sqrt(1.0 - a)
        x = sched.ddim_step(x, sched.predict_x0(x, eps, t), eps, t, t - 1)
    err = float(np.max(np.abs(x - x0)))
    if err > 1e-5:
        return False, f"oracle chain error {err:.2e}"
    return True, f"round trips exact, chain error {err:.2e}"


def _guidance_suite() -> tuple[bool, str]:
    sched = build_schedule(SamplerConfig(total_steps=10))
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        shape = (3, 3, 2)
        eps_u = rng.standard_normal(shape)
        eps_c = rng.standard_normal(shape)
        omega = float(rng.uniform(1.0, 12.0))
        out = DenoiseOutput(eps_c, eps_u)
        # Disentangle/combine are inverses.
        e = rng.standard_normal(shape)
        again = eps_u + omega * (disentangle_texture_condition(e, eps_u, omega) - eps_u)
        worst = max(worst, float(np.max(np.abs(again - e))))
        # Zero texture weight reduces to plain CFG.
        w = GuidanceWeights.text_only(omega)
        if not np.array_equal(multi_cond_combine(out, e, w, 5), cfg_combine(out, omega)):
            return False, "text-only reduction not exact"
        # Full texture weight reproduces the recalculated noise map.
        t = 5
        x = rng.standard_normal(shape)
        g = rng.standard_normal(shape)
        eps_hat = texture_noise(x, g, t, sched)
        w2 = GuidanceWeights.texture_only(omega)
        merged = multi_cond_combine(out, disentangle_texture_condition(eps_hat, eps_u, omega), w2, t)
        worst = max(worst, float(np.max(np.abs(merged - eps_hat))))
        # Recalculated noise pins the clean estimate to the render.
        worst = max(worst, float(np.max(np.abs(sched.predict_x0(x, eps_hat, t) - g))))
    if worst > 1e-9:
        return False, f"identity residual {worst:.2e}"
    return True, f"identity residual {worst:.2e}"


def _codec_suite() -> tuple[bool, str]:
    codec = ToyLossyCodec(CodecSpec(2, 4, "toy-lossy"))
    rng = np.random.default_rng(3)
    x = rng.standard_normal((16, 16, 3))
    y = rng.standard_normal((16, 16, 3))
    lin = codec.encode(0.3 * x + 0.7 * y) - (0.3 * codec.encode(x) + 0.7 * codec.encode(y))
    once = codec.decode(codec.encode(x))
    twice = codec.decode(codec.encode(once))
    err = max(float(np.max(np.abs(lin))), float(np.max(np.abs(twice - once))))
    if err > 1e-6:
        return False, f"linearity/idempotency residual {err:.2e}"
    return True, f"projection residual {err:.2e}"


def _geometry_suite() -> tuple[bool, str]:
    mesh = unit_quad()
    pose = CameraPose(azimuth=0.0, elevation=0.0, radius=2.0, fov=60.0, resolution=32)
    raster = rasterize(mesh, pose, 16)
    if not raster.valid.any():
        return False, "quad rasterized to zero pixels"
    rng = np.random.default_rng(5)
    tex = TextureMap(16)
    tex.texels = rng.uniform(size=tex.texels.shape)
    tex.covered[:] = True
    img = render(tex, raster)
    rebaked = inverse_render(img, raster, TextureMap(16), view_index=0)
    img2 = render(rebaked, raster)
    if not np.array_equal(img[raster.valid], img2[raster.valid]):
        return False, "scatter/gather round trip not exact"
    return True, f"round trip exact on {int(raster.valid.sum())} pixels"


def _gaussian_suite() -> tuple[bool, str]:
    # Reduced-sample version of the DDIM convergence check.
    sched = build_schedule(SamplerConfig(total_steps=40))
    mu, s = 0.7, 0.5
    backend = GaussianBackend(sched, mu_cond=mu, mu_uncond=mu, s=s)
    rng = np.random.default_rng(99)
    x = rng.standard_normal((25, 20, 4))  # 2000 scalar trajectories
    for t in sched.steps():
        out = backend.denoise(DenoiseRequest(latent=x, t=t))
        x0 = sched.predict_x0(x, out.eps_cond, t)
        x = sched.ddim_step(x, x0, out.eps_cond, t, t - 1)
    mean_err = abs(float(x.mean()) - mu)
    var_rel = abs(float(x.var()) - s * s) / (s * s)
    if mean_err > 0.1 or var_rel > 0.25:
        return False, f"mean err {mean_err:.3f}, var rel err {var_rel:.3f}"
    return True, f"mean err {mean_err:.3f}, var rel err {var_rel:.3f}"


SUITES: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("schedule", _schedule_suite),
    ("guidance", _guidance_suite),
    ("codec", _codec_suite),
    ("geometry", _geometry_suite),
    ("gaussian", _gaussian_suite),
]


def run_selftest(stream: TextIO | None = None) -> int:
    """Run every suite, print one pass/fail line each, return the exit code."""
    stream = stream if stream is not None else sys.stdout
    failures = 0
    for name, fn in SUITES:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed suite is a failed suite
            ok, detail = False, f"crashed: {exc}"
        status = "PASS" if ok else "FAIL"
        stream.write(f"{status}  {name:<10} {detail}\n")
        failures += 0 if ok else 1
    stream.write(f"{len(SUITES) - failures}/{len(SUITES)} suites passed\n")
    return 1 if failures else 0
