"""Noise-prediction backend interface.

A backend answers one request with both the conditional and unconditional
noise prediction for the same latent, optionally exporting or consuming
self-attention Key/Value state so a reference view's appearance can be
propagated to the other views at the same step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..guidance import DenoiseOutput
from ..schedule import ContractError


class BackendError(RuntimeError):
    """Backend could not produce a prediction."""


class KVUnsupported(BackendError):
    """Backend has no attention state to export (non-fatal: callers degrade
    to running without attention guidance)."""


@dataclass(frozen=True)
class PromptCondition:
    """Text prompt; None is the null-text prompt."""

    text: str | None = None


@dataclass(frozen=True)
class AttentionBundle:
    """Inline per-layer self-attention Key/Value tensors.

    Keys/values are (tokens, head_dim) arrays, one pair per attention layer.
    """

    keys: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.keys) != len(self.values):
            raise ContractError("keys and values must pair up per layer")


@dataclass(frozen=True)
class KVRef:
    """Opaque server-side handle to cached Key/Value state."""

    handle: str
    expires_at: float | None = None


@dataclass
class DenoiseRequest:
    latent: np.ndarray
    t: int
    prompt: PromptCondition = field(default_factory=PromptCondition)
    depth: np.ndarray | None = None
    kv_inject: AttentionBundle | KVRef | None = None
    want_kv: bool = False
    edit_edges: bool = False


class DenoiserBackend:
    """Interface all backends implement."""

    name = "base"
    supports_kv = False

    def denoise(self, req: DenoiseRequest) -> DenoiseOutput:
        raise NotImplementedError

    def export_kv(self, req: DenoiseRequest) -> AttentionBundle | KVRef:
        """Run a denoise with want_kv and return just the attention state."""
        if not self.supports_kv:
            raise KVUnsupported(f"{self.name} backend exports no attention state")
        req.want_kv = True
        out = self.denoise(req)
        if out.kv is None:
            raise KVUnsupported(f"{self.name} backend returned no attention state")
        return out.kv
