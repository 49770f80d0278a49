"""HTTP client for the texgen/1 wire protocol.

Envelope framing (requests and responses alike):

    uint32 LE header length | header JSON (utf-8) | raw payload bytes

Payload tensors are little-endian float32 in C order. A denoise request
carries the latent then the optional depth map; the response carries
eps_cond then eps_uncond. Attention state never travels inline: the server
caches it and returns a handle (inline bundles for a real UNet would be
hundreds of MB per step).

Transport failures and 5xx responses are retried up to ``retries`` times;
protocol-version mismatches and 4xx-class server errors are surfaced as
typed exceptions without retry.
"""

from __future__ import annotations

import json
import struct
import threading

import numpy as np
import requests

from ..guidance import DenoiseOutput
from ..schedule import ContractError, NoiseSchedule
from .base import AttentionBundle, BackendError, DenoiseRequest, DenoiserBackend, KVRef

PROTOCOL_VERSION = "texgen/1"


class RemoteError(BackendError):
    """Base class for remote-backend failures."""


class BackendUnavailable(RemoteError):
    """Endpoint unreachable or persistently failing."""


class ProtocolVersionError(RemoteError):
    """The two sides disagree on the protocol version; never retried."""


class ServerError(RemoteError):
    """The server rejected the request with a typed error payload."""

    def __init__(self, message: str, error_type: str = "server_error", status: int = 0):
        super().__init__(message)
        self.error_type = error_type
        self.status = status


class StaleKVError(ServerError):
    """A cached attention handle expired on the server."""


def pack_envelope(header: dict, payload: bytes = b"") -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack("<I", len(head)) + head + payload


def unpack_envelope(body: bytes) -> tuple[dict, bytes]:
    if len(body) < 4:
        raise ContractError("envelope shorter than its length prefix")
    (hlen,) = struct.unpack("<I", body[:4])
    if len(body) < 4 + hlen:
        raise ContractError("envelope truncated before end of header")
    header = json.loads(body[4 : 4 + hlen].decode("utf-8"))
    return header, body[4 + hlen :]


def floats_to_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def bytes_to_floats(raw: bytes, shape: tuple[int, ...]) -> np.ndarray:
    n = int(np.prod(shape))
    arr = np.frombuffer(raw[: 4 * n], dtype="<f4")
    if arr.size != n:
        raise ContractError(f"payload holds {arr.size} floats, expected {n}")
    return arr.reshape(shape).astype(np.float64)


class RemoteBackend(DenoiserBackend):
    """Client half of the texgen/1 protocol; also serves as the remote codec
    transport (encode_image / decode_latent)."""

    name = "remote"
    supports_kv = True

    def __init__(
        self,
        endpoint: str,
        sched: NoiseSchedule,
        timeout: float = 60.0,
        retries: int = 2,
        max_inflight: int = 4,
        kv_layers: str | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.sched = sched
        self.timeout = timeout
        self.retries = retries
        self.kv_layers = kv_layers
        self._session = requests.Session()
        self._gate = threading.Semaphore(max_inflight)

    # -- transport -------------------------------------------------------

    def _post(self, path: str, body: bytes) -> tuple[dict, bytes]:
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with self._gate:
                    resp = self._session.post(
                        self.endpoint + path,
                        data=body,
                        headers={"content-type": "application/octet-stream"},
                        timeout=self.timeout,
                    )
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = BackendUnavailable(f"{path}: server returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise self._typed_error(path, resp)
            header, payload = unpack_envelope(resp.content)
            version = header.get("version")
            if version != PROTOCOL_VERSION:
                raise ProtocolVersionError(
                    f"{path}: server speaks {version!r}, client speaks {PROTOCOL_VERSION!r}"
                )
            return header, payload
        raise BackendUnavailable(f"{path}: no response after {self.retries + 1} attempts: {last_exc}")

    @staticmethod
    def _typed_error(path: str, resp) -> RemoteError:
        try:
            info = resp.json().get("error", {})
        except ValueError:
            info = {}
        etype = info.get("type", "server_error")
        message = f"{path}: {info.get('message', resp.reason)} [{resp.status_code}]"
        if etype == "version_mismatch":
            return ProtocolVersionError(message)
        if etype == "stale_handle" or resp.status_code == 410:
            return StaleKVError(message, error_type="stale_handle", status=resp.status_code)
        return ServerError(message, error_type=etype, status=resp.status_code)

    # -- protocol operations ----------------------------------------------

    def build_denoise_body(self, req: DenoiseRequest) -> bytes:
        latent = np.asarray(req.latent, dtype=np.float64)
        header = {
            "version": PROTOCOL_VERSION,
            "step_t": int(req.t),
            "alpha_t": self.sched.alpha(req.t),
            "prompt": req.prompt.text,
            "null_prompt": True,
            "want_kv": bool(req.want_kv),
            "latent_shape": list(latent.shape),
            "depth_shape": list(req.depth.shape) if req.depth is not None else None,
        }
        if req.kv_inject is not None:
            if isinstance(req.kv_inject, AttentionBundle):
                raise ContractError("remote backend transports attention state by handle only")
            header["kv_handle"] = req.kv_inject.handle
        if self.kv_layers is not None:
            header["kv_layers"] = self.kv_layers
        if req.edit_edges:
            header["edge"] = True
        payload = floats_to_bytes(latent)
        if req.depth is not None:
            payload += floats_to_bytes(np.asarray(req.depth))
        return pack_envelope(header, payload)

    def denoise(self, req: DenoiseRequest) -> DenoiseOutput:
        latent = np.asarray(req.latent, dtype=np.float64)
        header, payload = self._post("/denoise", self.build_denoise_body(req))
        n = latent.size * 4
        if len(payload) < 2 * n:
            raise ContractError("denoise response payload shorter than two noise maps")
        eps_cond = bytes_to_floats(payload[:n], latent.shape)
        eps_uncond = bytes_to_floats(payload[n : 2 * n], latent.shape)
        kv = None
        if header.get("kv_handle"):
            kv = KVRef(handle=header["kv_handle"], expires_at=header.get("kv_expires_at"))
        return DenoiseOutput(eps_cond=eps_cond, eps_uncond=eps_uncond, kv=kv)

    def encode_image(self, img: np.ndarray) -> np.ndarray:
        header = {"version": PROTOCOL_VERSION, "image_shape": list(img.shape)}
        rhead, payload = self._post("/encode", pack_envelope(header, floats_to_bytes(img)))
        return bytes_to_floats(payload, tuple(rhead["latent_shape"]))

    def decode_latent(self, lat: np.ndarray) -> np.ndarray:
        header = {"version": PROTOCOL_VERSION, "latent_shape": list(lat.shape)}
        rhead, payload = self._post("/decode", pack_envelope(header, floats_to_bytes(lat)))
        return bytes_to_floats(payload, tuple(rhead["image_shape"]))

    def health(self) -> dict:
        try:
            resp = self._session.get(self.endpoint + "/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"/health: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"/health: server returned {resp.status_code}")
        return resp.json()
