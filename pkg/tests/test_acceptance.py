"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texloom.codec import CodecSpec
from texloom.denoiser import (
    DenoiseRequest,
    GaussianBackend,
    KVUnsupported,
    PromptCondition,
    ToyAttentionBackend,
)
from texloom.geometry import (
    CameraPose,
    TextureMap,
    inverse_render,
    load_mesh,
    rasterize,
    render,
    sample_views,
    symmetric_view_order,
)
from texloom.geometry.mesh import atlas_occupancy
from texloom.guidance import (
    DenoiseOutput,
    GuidanceWeights,
    cfg_combine,
    disentangle_texture_condition,
    multi_cond_combine,
    texture_noise,
)
from texloom.pipeline import RunConfig, TexturePipeline, blend_latents, texture_hash
from texloom.schedule import SamplerConfig, build_schedule

from test_geometry import brute_force_raster

SPHERE = "tests/fixtures/sphere.obj"
CUBE = "tests/fixtures/cube.obj"
QUAD = "tests/fixtures/quad.obj"


def sphere_config(**overrides) -> RunConfig:
    base = dict(
        prompt="ancient mosaic tiles",
        mesh=SPHERE,
        sampler=SamplerConfig(total_steps=8, seed=3),
        omega=7.5,
        n_azimuth=8,
        add_top=True,
        tex_size=128,
        img_size=64,
        codec=CodecSpec(2, 4, "toy-lossy"),
        backend="toyattn",
        radius=8.0,
        fov=16.0,
    )
    base.update(overrides)
    return RunConfig(**base)


def high_freq_energy(img: np.ndarray, cutoff: float = 0.25) -> float:
    img = img - img.mean(axis=(0, 1), keepdims=True)
    h, w = img.shape[:2]
    fy = np.abs(np.fft.fftfreq(h))[:, None]
    fx = np.abs(np.fft.fftfreq(w))[None, :]
    hf = np.maximum(fy, fx) > cutoff
    return sum(
        float((np.abs(np.fft.fft2(img[:, :, c])) ** 2)[hf].sum()) for c in range(img.shape[2])
    )


def test_criterion_01_cfg_algebra_suite():
    sched = build_schedule(SamplerConfig(total_steps=40))
    rng = np.random.default_rng(1)
    started = time.perf_counter()
    worst_inverse = worst_collapse = worst_roundtrip = 0.0
    for _ in range(1000):
        shape = (4, 4, 4)
        eps_u = rng.standard_normal(shape)
        eps_c = rng.standard_normal(shape)
        x_t = rng.standard_normal(shape)
        g = rng.standard_normal(shape)
        omega = float(rng.uniform(0.5, 15.0))
        t = int(rng.integers(1, 41))
        out = DenoiseOutput(eps_c, eps_u)

        # Disentangle then re-combine is the identity (<= 1e-9).
        e = rng.standard_normal(shape)
        back = eps_u + omega * (disentangle_texture_condition(e, eps_u, omega) - eps_u)
        worst_inverse = max(worst_inverse, float(np.max(np.abs(back - e))))

        # Zero texture weight reduces the combined estimate to plain CFG (exact).
        assert np.array_equal(
            multi_cond_combine(out, g, GuidanceWeights.text_only(omega), t),
            cfg_combine(out, omega),
        )

        # Zero text weight collapses to the recalculated texture noise (<= 1e-9).
        eps_hat = texture_noise(x_t, g, t, sched)
        merged = multi_cond_combine(
            out,
            disentangle_texture_condition(eps_hat, eps_u, omega),
            GuidanceWeights.texture_only(omega),
            t,
        )
        worst_collapse = max(worst_collapse, float(np.max(np.abs(merged - eps_hat))))

        # Recalculated noise pins the clean-latent estimate to the render (<= 1e-6).
        x0 = sched.predict_x0(x_t, eps_hat, t)
        worst_roundtrip = max(worst_roundtrip, float(np.max(np.abs(x0 - g))))

    elapsed = time.perf_counter() - started
    assert worst_inverse <= 1e-9
    assert worst_collapse <= 1e-9
    assert worst_roundtrip <= 1e-6
    assert elapsed < 5.0
    print(
        f"\nPASS criterion 1: CFG algebra over 1000 instances "
        f"(inverse {worst_inverse:.1e}, collapse {worst_collapse:.1e}, "
        f"roundtrip {worst_roundtrip:.1e}) in {elapsed:.2f}s"
    )


def test_criterion_02_ddim_gaussian_convergence():
    # 10k trajectories of a d=4 latent live in one (50, 50, 16) array; every
    # element is an independent scalar trajectory of the same Gaussian.
    sched = build_schedule(SamplerConfig(total_steps=40, schedule_kind="cosine"))
    mu, s = 1.0, 0.7
    backend = GaussianBackend(sched, mu_cond=mu, mu_uncond=mu, s=s)
    started = time.perf_counter()
    x = np.random.default_rng(123).standard_normal((50, 50, 16))
    for t in sched.steps():
        eps = backend.denoise(DenoiseRequest(latent=x, t=t)).eps_cond
        x = sched.ddim_step(x, sched.predict_x0(x, eps, t), eps, t, t - 1)
    elapsed = time.perf_counter() - started
    mean_err = abs(float(x.mean()) - mu)
    var_rel = abs(float(x.var()) - s * s) / (s * s)
    assert mean_err <= 0.05
    assert var_rel <= 0.10
    assert elapsed < 60.0
    print(
        f"\nPASS criterion 2: Gaussian DDIM chain, mean err {mean_err:.4f} (<=0.05), "
        f"var rel err {var_rel:.3f} (<=0.10) in {elapsed:.1f}s"
    )


def test_criterion_03_geometry_suite():
    started = time.perf_counter()
    cases = [
        ("quad", CameraPose(0.0, 0.0, 2.0, 60.0, 32)),
        ("cube", CameraPose(30.0, 20.0, 3.0, 50.0, 48)),
        ("sphere", CameraPose(45.0, 0.0, 8.0, 16.0, 64)),
    ]
    for name, pose in cases:
        mesh = load_mesh(f"tests/fixtures/{name}.obj")
        raster = rasterize(mesh, pose, 32)
        texel_o, depth_o = brute_force_raster(mesh, pose, 32)
        assert np.array_equal(raster.valid, texel_o >= 0), name
        assert np.array_equal(raster.texel_id, texel_o), name
        assert np.max(np.abs(raster.depth[raster.valid] - depth_o[raster.valid])) <= 1e-5

    # Scatter/gather round trip, bitwise on valid pixels.
    mesh = load_mesh(SPHERE)
    pose = CameraPose(70.0, 10.0, 8.0, 16.0, 64)
    raster = rasterize(mesh, pose, 64)
    tex = TextureMap(64)
    tex.texels = np.random.default_rng(5).uniform(size=tex.texels.shape)
    tex.covered[:] = True
    img = render(tex, raster)
    img2 = render(inverse_render(img, raster, TextureMap(64), 0), raster)
    assert np.array_equal(img[raster.valid], img2[raster.valid])

    # 9-view sphere coverage of sphere-occupied texels.
    views = sample_views(8, True, radius=8.0, fov=16.0, resolution=64)
    views = [views[i] for i in symmetric_view_order(8, True)]
    tex = TextureMap(128)
    blank = np.zeros((64, 64, 3))
    rasters = [rasterize(mesh, v, 128) for v in views]
    for idx, r in enumerate(rasters):
        inverse_render(blank, r, tex, idx, min_cos=0.2)
    for idx, r in enumerate(rasters):
        inverse_render(blank, r, tex, idx, min_cos=0.0)
    occupied = atlas_occupancy(mesh, 128)
    coverage = (tex.covered & occupied).sum() / occupied.sum()
    elapsed = time.perf_counter() - started
    assert coverage >= 0.99
    assert elapsed < 30.0
    print(
        f"\nPASS criterion 3: rasterizer==oracle on 3 fixtures, round trip bitwise, "
        f"9-view sphere coverage {coverage:.2%} (>=99%) in {elapsed:.1f}s"
    )


@given(seed=st.integers(0, 2**31), t=st.integers(1, 40))
@settings(max_examples=120, deadline=None)
def test_criterion_04_blending_exactness(seed, t):
    sched = build_schedule(SamplerConfig(total_steps=40))
    rng = np.random.default_rng(seed)
    x_t = rng.standard_normal((8, 8, 4))
    g = rng.standard_normal((8, 8, 4))
    eps = rng.standard_normal((8, 8, 4))
    mask = rng.uniform(size=(8, 8)) < rng.uniform()
    noised = sched.add_noise(g, eps, t)
    blended = blend_latents(x_t, noised, mask)
    assert np.array_equal(blended[mask], x_t[mask])
    assert np.array_equal(blended[~mask], noised[~mask])


def test_criterion_04_report():
    print("\nPASS criterion 4: blend keeps masked region bitwise x_t and unmasked "
          "bitwise add_noise(G, eps, t) over random masks")


def test_criterion_05_oversmoothing_reproduction():
    started = time.perf_counter()
    cfg_full = sphere_config(sampler=SamplerConfig(total_steps=40, seed=11))
    cfg_pure = sphere_config(sampler=SamplerConfig(total_steps=40, seed=11), omega1_zero=True)
    full = TexturePipeline(cfg_full).run().texture
    pure = TexturePipeline(cfg_pure).run().texture
    elapsed = time.perf_counter() - started
    e_full = high_freq_energy(full.texels)
    e_pure = high_freq_energy(pure.texels)
    ratio = e_full / e_pure
    assert ratio >= 1.2  # measured 1.74 on the frozen seed
    assert elapsed < 120.0
    print(
        f"\nPASS criterion 5: high-frequency energy ratio full/pure = {ratio:.2f} "
        f"(>=1.2) in {elapsed:.1f}s"
    )


def test_criterion_06_ablation_arms_distinct():
    arms = {
        "full": sphere_config(),
        "no_attention": sphere_config(no_attention=True),
        "omega1_zero": sphere_config(omega1_zero=True),
        "omega2_zero": sphere_config(omega2_zero=True),
    }
    hashes = {}
    for name, cfg in arms.items():
        result = TexturePipeline(cfg).run()
        hashes[name] = texture_hash(result.texture)
    assert len(set(hashes.values())) == len(hashes)
    print(
        "\nPASS criterion 6: ablation arms complete with distinct hashes: "
        + ", ".join(f"{k}={v[:8]}" for k, v in hashes.items())
    )


def test_criterion_07_determinism():
    a = TexturePipeline(sphere_config(sampler=SamplerConfig(total_steps=6, seed=21))).run()
    b = TexturePipeline(sphere_config(sampler=SamplerConfig(total_steps=6, seed=21))).run()
    assert np.array_equal(a.texture.texels, b.texture.texels)
    assert np.array_equal(a.texture.covered, b.texture.covered)
    assert texture_hash(a.texture) == texture_hash(b.texture)
    print(f"\nPASS criterion 7: fixed seed reproduces texture bit-identically "
          f"({texture_hash(a.texture)[:12]})")


def test_criterion_08_kv_mechanics():
    sched = build_schedule(SamplerConfig(total_steps=40))
    backend = ToyAttentionBackend(sched, channels=4)
    rng = np.random.default_rng(17)
    x = rng.standard_normal((4, 4, 4))
    prompt = PromptCondition("kv mechanics")

    native = backend.denoise(DenoiseRequest(latent=x, t=20, prompt=prompt))
    kv = backend.export_kv(DenoiseRequest(latent=x, t=20, prompt=prompt))
    injected = backend.denoise(DenoiseRequest(latent=x, t=20, prompt=prompt, kv_inject=kv))
    assert np.array_equal(native.eps_cond, injected.eps_cond)
    assert np.array_equal(native.eps_uncond, injected.eps_uncond)

    other_kv = backend.export_kv(
        DenoiseRequest(latent=rng.standard_normal((4, 4, 4)), t=20, prompt=prompt)
    )
    a = backend.denoise(DenoiseRequest(latent=x.copy(), t=20, prompt=prompt, kv_inject=other_kv))
    b = backend.denoise(DenoiseRequest(latent=x.copy(), t=20, prompt=prompt, kv_inject=other_kv))
    assert np.array_equal(a.eps_cond, b.eps_cond)
    assert np.array_equal(a.eps_uncond, b.eps_uncond)

    # No-KV fallback: a backend without attention state degrades the pipeline
    # to running without attention guidance rather than failing.
    gauss = GaussianBackend(build_schedule(SamplerConfig(total_steps=2)))
    with pytest.raises(KVUnsupported):
        gauss.export_kv(DenoiseRequest(latent=x, t=1))
    cfg = sphere_config(
        mesh=CUBE, sampler=SamplerConfig(total_steps=2, seed=1), backend="gaussian",
        n_azimuth=2, add_top=False, tex_size=32, img_size=16,
    )
    pipe = TexturePipeline(cfg)
    assert not pipe.use_attention
    pipe.run()
    print("\nPASS criterion 8: self-substitution exact, equal-query/equal-KV exact, "
          "no-KV fallback exercised")
