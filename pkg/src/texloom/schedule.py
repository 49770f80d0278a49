"""Diffusion noise schedule and deterministic DDIM step arithmetic.

Convention: inference steps are indexed t = T..1 (t = T is the noisiest,
first-sampled step). alpha(t) is the cumulative noise-retention coefficient
(the usual alpha-bar), strictly decreasing in t, and alpha(0) = 1 marks the
noiseless terminal state. sigma(t) = sqrt(1 - alpha(t)).

The default construction mirrors the stable-diffusion backbone: a linear
beta ramp over 1000 training steps whose cumulative products are uniformly
subsampled down to the requested number of inference steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_STEPS = 1000
BETA_START = 1e-4
BETA_END = 2e-2

SCHEDULE_KINDS = ("linear", "cosine")


class ConfigError(ValueError):
    """Invalid sampler or run configuration."""


class ContractError(ValueError):
    """An operation was called outside its input contract."""


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler knobs: number of inference steps, schedule family, RNG seed."""

    total_steps: int = 40
    schedule_kind: str = "linear"
    seed: int = 0

    def validate(self) -> None:
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.schedule_kind not in SCHEDULE_KINDS:
            raise ConfigError(
                f"unknown schedule_kind {self.schedule_kind!r}; expected one of {SCHEDULE_KINDS}"
            )


class NoiseSchedule:
    """Immutable alpha-bar sequence indexed by inference step t in 1..T.

    alpha(0) == 1.0 by convention (the clean terminal state), so the final
    DDIM step collapses onto the x0 estimate.
    """

    def __init__(self, alphas: np.ndarray | list[float]):
        alphas = np.asarray(alphas, dtype=np.float64)
        if alphas.ndim != 1 or alphas.size < 1:
            raise ConfigError("alphas must be a non-empty 1-D sequence")
        if np.any(alphas <= 0.0) or np.any(alphas > 1.0):
            raise ConfigError("every alpha must lie in (0, 1]")
        if alphas.size > 1 and np.any(np.diff(alphas) >= 0.0):
            raise ConfigError("alphas must be strictly decreasing in t")
        self._alphas = alphas.copy()
        self._alphas.flags.writeable = False

    @property
    def total_steps(self) -> int:
        return int(self._alphas.size)

    @property
    def alphas(self) -> np.ndarray:
        """alpha(t) for t = 1..T, as an array of length T."""
        return self._alphas

    def steps(self) -> list[int]:
        """Sampling order: T, T-1, ..., 1."""
        return list(range(self.total_steps, 0, -1))

    def alpha(self, t: int) -> float:
        if t == 0:
            return 1.0
        if not 1 <= t <= self.total_steps:
            raise ContractError(f"step {t} outside schedule range 0..{self.total_steps}")
        return float(self._alphas[t - 1])

    def sigma(self, t: int) -> float:
        return float(np.sqrt(1.0 - self.alpha(t)))

    # -- DDIM step arithmetic ------------------------------------------------

    def predict_x0(self, x_t: np.ndarray, eps: np.ndarray, t: int) -> np.ndarray:
        """Clean-latent estimate: (x_t - sqrt(1-a_t) * eps) / sqrt(a_t)."""
        x_t, eps = _check_pair(x_t, eps)
        a = self.alpha(t)
        return (x_t - np.sqrt(1.0 - a) * eps) / np.sqrt(a)

    def ddim_step(
        self, x_t: np.ndarray, x0_hat: np.ndarray, eps: np.ndarray, t: int, t_next: int
    ) -> np.ndarray:
        """Deterministic DDIM transition to step t_next (t_next = 0 terminates)."""
        x0_hat, eps = _check_pair(x0_hat, eps)
        if x_t.shape != x0_hat.shape:
            raise ContractError(f"shape mismatch: {x_t.shape} vs {x0_hat.shape}")
        if not 0 <= t_next <= self.total_steps:
            raise ContractError(f"t_next {t_next} outside schedule range")
        if t_next > t:
            raise ContractError(f"t_next {t_next} must not exceed t {t}")
        a = self.alpha(t_next)
        return np.sqrt(a) * x0_hat + np.sqrt(1.0 - a) * eps

    def add_noise(self, x0: np.ndarray, eps: np.ndarray, t: int) -> np.ndarray:
        """Forward diffusion to step t: sqrt(a_t) * x0 + sqrt(1-a_t) * eps."""
        x0, eps = _check_pair(x0, eps)
        a = self.alpha(t)
        return np.sqrt(a) * x0 + np.sqrt(1.0 - a) * eps


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _linear_alpha_bars() -> np.ndarray:
    betas = np.linspace(BETA_START, BETA_END, TRAIN_STEPS, dtype=np.float64)
    return np.cumprod(1.0 - betas)


def _cosine_alpha_bars() -> np.ndarray:
    # Squared-cosine alpha-bar ramp with the customary 0.008 offset; the
    # per-step betas are clipped at 0.999 before re-accumulating.
    s = 0.008
    steps = np.arange(TRAIN_STEPS + 1, dtype=np.float64)
    f = np.cos((steps / TRAIN_STEPS + s) / (1.0 + s) * np.pi / 2.0) ** 2
    alpha_bar = f / f[0]
    betas = np.clip(1.0 - alpha_bar[1:] / alpha_bar[:-1], 0.0, 0.999)
    return np.cumprod(1.0 - betas)


def build_schedule(cfg: SamplerConfig) -> NoiseSchedule:
    """Build the inference schedule by uniform subsampling of the training ramp.

    Inference step t maps to training step round(t * TRAIN_STEPS / T), so
    t = T always lands on the final (noisiest) training step.
    """
    cfg.validate()
    if cfg.schedule_kind == "linear":
        alpha_bars = _linear_alpha_bars()
    else:
        alpha_bars = _cosine_alpha_bars()
    T = cfg.total_steps
    if T > TRAIN_STEPS:
        raise ConfigError(f"total_steps must be <= {TRAIN_STEPS}, got {T}")
    train_idx = np.round(np.arange(1, T + 1) * (TRAIN_STEPS / T)).astype(int)
    train_idx = np.clip(train_idx, 1, TRAIN_STEPS)
    return NoiseSchedule(alpha_bars[train_idx - 1])
