"""Noise-estimation algebra: classifier-free guidance, texture-conditioned
noise recalculation, its disentanglement, and the two-condition combination
with a decaying texture weight.

All functions are pure elementwise array algebra. The texture weight
(texture_weight) starts at the full guidance scale on the first sampling
step and decays linearly over the inference-step index to 0 on the last
step; the text weight is always `omega - texture_weight(t)` so the two
weights sum to the total scale exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .schedule import ContractError, NoiseSchedule

ALPHA_SINGULARITY = 1.0 - 1e-8


class SingularityError(ContractError):
    """Noise recalculation attempted at a (near-)noiseless step."""


def omega2_schedule(t: int, total_steps: int, omega: float) -> float:
    """Texture-guidance weight at step t, linear in the inference-step index.

    Equals omega at t = total_steps (first sampling step) and 0 at t = 1
    (last step). A single-step schedule gets 0: the sole step is the last.
    """
    if total_steps <= 1:
        return 0.0
    return omega * (t - 1) / (total_steps - 1)


@dataclass(frozen=True)
class GuidanceWeights:
    """Total guidance scale plus the per-step split between text and texture.

    texture_weight(t) + text_weight(t) == omega holds exactly at every step.
    """

    omega: float
    texture_weight_fn: Callable[[int], float] = field(repr=False)

    @classmethod
    def linear_decay(cls, omega: float, total_steps: int) -> "GuidanceWeights":
        return cls(omega, lambda t: omega2_schedule(t, total_steps, omega))

    @classmethod
    def texture_only(cls, omega: float) -> "GuidanceWeights":
        """Constant full texture weight (zero text weight): pure replacement arm."""
        return cls(omega, lambda t: omega)

    @classmethod
    def text_only(cls, omega: float) -> "GuidanceWeights":
        """Zero texture weight at every step: plain text CFG."""
        return cls(omega, lambda t: 0.0)

    def texture_weight(self, t: int) -> float:
        return self.texture_weight_fn(t)

    def text_weight(self, t: int) -> float:
        return self.omega - self.texture_weight_fn(t)


@dataclass(frozen=True)
class DenoiseOutput:
    """Conditional/unconditional noise predictions from one backend call."""

    eps_cond: np.ndarray
    eps_uncond: np.ndarray
    kv: object | None = None

    def __post_init__(self):
        if self.eps_cond.shape != self.eps_uncond.shape:
            raise ContractError(
                f"eps_cond shape {self.eps_cond.shape} != eps_uncond shape {self.eps_uncond.shape}"
            )


def cfg_combine(out: DenoiseOutput, omega: float) -> np.ndarray:
    """Classifier-free guidance: eps_uncond + omega * (eps_cond - eps_uncond)."""
    return out.eps_uncond + omega * (out.eps_cond - out.eps_uncond)


def texture_noise(
    x_t: np.ndarray, encoded_render: np.ndarray, t: int, sched: NoiseSchedule
) -> np.ndarray:
    """Recalculate the noise map that makes the clean-latent estimate equal the
    encoded texture render: (x_t - sqrt(a_t) * render) / sqrt(1 - a_t)."""
    if x_t.shape != encoded_render.shape:
        raise ContractError(f"shape mismatch: {x_t.shape} vs {encoded_render.shape}")
    a = sched.alpha(t)
    if a >= ALPHA_SINGULARITY:
        raise SingularityError(
            f"cannot recalculate noise at step {t}: alpha = {a} is (near-)noiseless"
        )
    return (x_t - np.sqrt(a) * encoded_render) / np.sqrt(1.0 - a)


def disentangle_texture_condition(
    eps_hat_tex: np.ndarray, eps_uncond: np.ndarray, omega: float
) -> np.ndarray:
    """Invert the CFG combination to expose the texture-conditioned prediction:
    (1/omega) * (eps_hat_tex - eps_uncond) + eps_uncond."""
    if omega == 0.0:
        raise ContractError("disentangling requires a nonzero guidance scale")
    if eps_hat_tex.shape != eps_uncond.shape:
        raise ContractError(f"shape mismatch: {eps_hat_tex.shape} vs {eps_uncond.shape}")
    return (eps_hat_tex - eps_uncond) / omega + eps_uncond


def multi_cond_combine(
    out: DenoiseOutput, eps_tex_cond: np.ndarray, weights: GuidanceWeights, t: int
) -> np.ndarray:
    """Two-condition CFG: extrapolate from eps_uncond along both the text and
    the texture direction with the step-dependent weight split."""
    if eps_tex_cond.shape != out.eps_uncond.shape:
        raise ContractError(f"shape mismatch: {eps_tex_cond.shape} vs {out.eps_uncond.shape}")
    w_text = weights.text_weight(t)
    w_tex = weights.texture_weight(t)
    return (
        out.eps_uncond
        + w_text * (out.eps_cond - out.eps_uncond)
        + w_tex * (eps_tex_cond - out.eps_uncond)
    )
