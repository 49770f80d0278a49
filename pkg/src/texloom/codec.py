"""Latent encode/decode boundary.

Three codec kinds:

* ``identity`` — pass-through, factor 1, 3 channels. Makes pipeline
  identities bit-testable.
* ``toy-lossy`` — box-filter downsample by ``factor`` plus a fixed
  orthonormal 3 -> channels lift; decode projects back and nearest-neighbor
  upsamples. This is an exact linear projection (decode(encode(x)) applied
  twice equals applying it once), so the detail loss of repeated round
  trips is provable rather than anecdotal.
* ``remote`` — delegates to an HTTP backend client (same wire protocol as
  the denoiser).

Latents are plain float64 arrays of shape (H/factor, W/factor, channels);
images are (H, W, 3). Latent values are unconstrained reals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import ConfigError, ContractError

CODEC_KINDS = ("identity", "toy-lossy", "remote")

# Fixed channel lift: orthonormal columns from a seeded QR, so the decode
# projection (its transpose) composes to the identity on RGB.
_CHANNEL_SEED = 170183


def _channel_lift(channels: int) -> np.ndarray:
    if channels < 3:
        raise ConfigError(f"toy codec needs >= 3 latent channels, got {channels}")
    rng = np.random.default_rng(_CHANNEL_SEED)
    m = rng.standard_normal((channels, channels))
    q, _ = np.linalg.qr(m)
    return q[:, :3]  # (channels, 3), orthonormal columns


@dataclass(frozen=True)
class CodecSpec:
    factor: int = 1
    channels: int = 3
    kind: str = "identity"

    def validate(self) -> None:
        if self.kind not in CODEC_KINDS:
            raise ConfigError(f"unknown codec kind {self.kind!r}; expected one of {CODEC_KINDS}")
        if self.factor < 1:
            raise ConfigError(f"codec factor must be >= 1, got {self.factor}")
        if self.kind == "identity" and (self.factor != 1 or self.channels != 3):
            raise ConfigError("identity codec requires factor 1 and 3 channels")


class IdentityCodec:
    spec = CodecSpec(1, 3, "identity")

    def encode(self, img: np.ndarray) -> np.ndarray:
        return np.asarray(img, dtype=np.float64).copy()

    def decode(self, lat: np.ndarray) -> np.ndarray:
        return np.asarray(lat, dtype=np.float64).copy()


class ToyLossyCodec:
    """Box downsample + fixed orthonormal channel lift; exact linear projection."""

    def __init__(self, spec: CodecSpec):
        spec.validate()
        self.spec = spec
        self._lift = _channel_lift(spec.channels)

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        f = self.spec.factor
        if img.ndim != 3 or img.shape[2] != 3:
            raise ContractError(f"expected (H, W, 3) image, got shape {img.shape}")
        h, w, _ = img.shape
        if h % f or w % f:
            raise ContractError(f"image dims {h}x{w} not divisible by factor {f}")
        boxed = img.reshape(h // f, f, w // f, f, 3).mean(axis=(1, 3))
        return boxed @ self._lift.T

    def decode(self, lat: np.ndarray) -> np.ndarray:
        lat = np.asarray(lat, dtype=np.float64)
        c = self.spec.channels
        if lat.ndim != 3 or lat.shape[2] != c:
            raise ContractError(f"expected (h, w, {c}) latent, got shape {lat.shape}")
        rgb = lat @ self._lift
        f = self.spec.factor
        return np.repeat(np.repeat(rgb, f, axis=0), f, axis=1)


class RemoteCodec:
    """Delegates encode/decode to a wire-protocol backend client."""

    def __init__(self, spec: CodecSpec, client):
        spec.validate()
        self.spec = spec
        self._client = client

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = np.asarray(img, dtype=np.float64)
        f = self.spec.factor
        if img.shape[0] % f or img.shape[1] % f:
            raise ContractError(f"image dims {img.shape[:2]} not divisible by factor {f}")
        return self._client.encode_image(img)

    def decode(self, lat: np.ndarray) -> np.ndarray:
        return self._client.decode_latent(np.asarray(lat, dtype=np.float64))


def build_codec(spec: CodecSpec, client=None):
    spec.validate()
    if spec.kind == "identity":
        return IdentityCodec()
    if spec.kind == "toy-lossy":
        return ToyLossyCodec(spec)
    if client is None:
        raise ConfigError("remote codec requires a backend client")
    return RemoteCodec(spec, client)
