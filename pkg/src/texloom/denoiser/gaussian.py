"""Analytic backend: exact noise prediction for an isotropic Gaussian target.

If clean latents are distributed N(mu, s^2 I), the forward-noised marginal
at step t is N(sqrt(a_t) * mu, (a_t s^2 + 1 - a_t) I), whose score is
available in closed form. The noise prediction is -sigma_t times the score:

    eps(x, t) = sqrt(1 - a_t) * (x - sqrt(a_t) * mu) / (a_t s^2 + 1 - a_t)

Conditional and unconditional predictions use separate means, so CFG has
a direction to extrapolate along.
"""

from __future__ import annotations

import numpy as np

from ..guidance import DenoiseOutput
from ..schedule import NoiseSchedule
from .base import DenoiseRequest, DenoiserBackend


def gaussian_eps(x: np.ndarray, t: int, sched: NoiseSchedule, mu: float, s: float) -> np.ndarray:
    a = sched.alpha(t)
    var = a * s * s + (1.0 - a)
    return np.sqrt(1.0 - a) * (x - np.sqrt(a) * mu) / var


def gaussian_log_density(
    x: np.ndarray, t: int, sched: NoiseSchedule, mu: float, s: float
) -> float:
    """Log density of the noised marginal at x (up to the usual constant)."""
    a = sched.alpha(t)
    var = a * s * s + (1.0 - a)
    d = x.size
    return float(-0.5 * np.sum((x - np.sqrt(a) * mu) ** 2) / var - 0.5 * d * np.log(2 * np.pi * var))


class GaussianBackend(DenoiserBackend):
    """Closed-form denoiser for a Gaussian latent population."""

    name = "gaussian"
    supports_kv = False

    def __init__(
        self,
        sched: NoiseSchedule,
        mu_cond: float = 1.0,
        mu_uncond: float = 0.0,
        s: float = 0.5,
    ):
        self.sched = sched
        self.mu_cond = mu_cond
        self.mu_uncond = mu_uncond
        self.s = s

    def denoise(self, req: DenoiseRequest) -> DenoiseOutput:
        x = np.asarray(req.latent, dtype=np.float64)
        eps_c = gaussian_eps(x, req.t, self.sched, self.mu_cond, self.s)
        eps_u = gaussian_eps(x, req.t, self.sched, self.mu_uncond, self.s)
        return DenoiseOutput(eps_cond=eps_c, eps_uncond=eps_u, kv=None)
