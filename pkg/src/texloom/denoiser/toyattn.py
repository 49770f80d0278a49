"""Toy attention backend: a deterministic, untrained stand-in for a latent
diffusion UNet, parameterized through its clean-content prediction.

The content estimate is a posterior-mean shrinkage of the latent toward the
origin (what an ideal denoiser does for a zero-mean Gaussian population)
plus a detail field from a single-head self-attention block over latent
tokens. Detail fades with the noise level, so at low noise the prediction
tracks whatever content the latent already carries, as a trained denoiser
would. The noise prediction is derived from the content estimate, so the
clean-latent estimate of a prediction is exactly the content.

The conditional branch additionally carries a prompt-seeded high-frequency
field (``pattern_gain``): the stand-in for the detail prior a text-to-image
model contributes, which texture-replacement-only sampling washes out.

Key/Value are computed from content-only token features (the prompt enters
after attention), so one exported (K, V) pair serves both branches and
injecting a view's own freshly exported state reproduces its output bit
for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..guidance import DenoiseOutput
from ..schedule import ContractError, NoiseSchedule
from .base import AttentionBundle, DenoiseRequest, DenoiserBackend

D_MODEL = 32
_WEIGHT_SEED = 61409


def prompt_seed(text: str | None) -> int:
    """Process-stable 63-bit seed for a prompt string (None = null prompt)."""
    tag = b"\x00" if text is None else text.encode("utf-8")
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    return int.from_bytes(digest, "little") & 0x7FFFFFFFFFFFFFFF


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class ToyAttentionBackend(DenoiserBackend):
    name = "toyattn"
    supports_kv = True

    def __init__(
        self,
        sched: NoiseSchedule,
        channels: int = 4,
        pattern_gain: float = 0.8,
        prior_scale: float = 1.0,
    ):
        self.sched = sched
        self.channels = channels
        self.pattern_gain = pattern_gain
        self.prior_scale = prior_scale
        rng = np.random.default_rng(_WEIGHT_SEED)
        d = D_MODEL
        scale = 1.0 / np.sqrt(d)
        self.w_embed = rng.standard_normal((channels, d)) / np.sqrt(channels)
        self.w_q = rng.standard_normal((d, d)) * scale
        self.w_k = rng.standard_normal((d, d)) * scale
        self.w_v = rng.standard_normal((d, d)) * scale
        self.w_out = rng.standard_normal((d, channels)) * scale
        self.w_time = rng.standard_normal(d) * 0.1
        self.w_depth = rng.standard_normal(d) * 0.1

    # -- internals -----------------------------------------------------------

    def _tokens(self, latent: np.ndarray, t: int, depth: np.ndarray | None) -> np.ndarray:
        h, w, c = latent.shape
        if c != self.channels:
            raise ContractError(f"backend expects {self.channels} channels, got {c}")
        x = latent.reshape(h * w, c) @ self.w_embed
        x = x + np.sin(0.15 * t) * self.w_time[None, :]
        if depth is not None:
            dh, dw = depth.shape
            if dh % h or dw % w:
                raise ContractError(f"depth {depth.shape} not reducible to latent {h}x{w}")
            fy, fx = dh // h, dw // w
            d_small = depth.reshape(h, fy, w, fx).mean(axis=(1, 3)).reshape(h * w)
            x = x + d_small[:, None] * self.w_depth[None, :]
        return x

    def _pattern(self, text: str | None, shape: tuple[int, ...]) -> np.ndarray:
        if text is None:
            return np.zeros(shape)
        rng = np.random.default_rng(prompt_seed(text))
        return self.pattern_gain * rng.choice([-1.0, 1.0], size=shape)

    def _prompt_bias(self, text: str | None) -> np.ndarray:
        if text is None:
            return np.zeros(self.channels)
        rng = np.random.default_rng(prompt_seed(text) + 1)
        return 0.3 * rng.standard_normal(self.channels)

    # -- interface -----------------------------------------------------------

    def denoise(self, req: DenoiseRequest) -> DenoiseOutput:
        latent = np.asarray(req.latent, dtype=np.float64)
        if latent.ndim != 3:
            raise ContractError(f"latent must be (h, w, c), got shape {latent.shape}")
        tokens = self._tokens(latent, req.t, req.depth)

        q = tokens @ self.w_q
        if req.kv_inject is not None:
            if not isinstance(req.kv_inject, AttentionBundle):
                raise ContractError("toy backend accepts only inline attention bundles")
            (k,) = req.kv_inject.keys
            (v,) = req.kv_inject.values
            if k.shape[0] != q.shape[0]:
                raise ContractError(
                    f"injected KV has {k.shape[0]} tokens, latent produces {q.shape[0]}"
                )
        else:
            k = tokens @ self.w_k
            v = tokens @ self.w_v

        attn = _softmax(q @ k.T / np.sqrt(D_MODEL)) @ v
        detail = ((tokens + attn) @ self.w_out).reshape(latent.shape)

        a = self.sched.alpha(req.t)
        noise_frac = 1.0 - a
        s2 = self.prior_scale * self.prior_scale
        shrink = np.sqrt(a) * s2 * latent / (a * s2 + 1.0 - a)  # posterior mean

        text = req.prompt.text
        content_uncond = shrink + noise_frac * 0.3 * detail
        content_cond = content_uncond + noise_frac * (
            self._prompt_bias(text)[None, None, :] + self._pattern(text, latent.shape)
        )

        root_a, root_noise = np.sqrt(a), np.sqrt(1.0 - a)
        eps_cond = (latent - root_a * content_cond) / root_noise
        eps_uncond = (latent - root_a * content_uncond) / root_noise

        kv = None
        if req.want_kv:
            # Export the view's own attention state even under injection.
            own_k = tokens @ self.w_k if req.kv_inject is not None else k
            own_v = tokens @ self.w_v if req.kv_inject is not None else v
            kv = AttentionBundle(keys=(own_k,), values=(own_v,))
        return DenoiseOutput(eps_cond=eps_cond, eps_uncond=eps_uncond, kv=kv)
