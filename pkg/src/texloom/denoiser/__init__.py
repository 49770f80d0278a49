from .base import (
    AttentionBundle,
    BackendError,
    DenoiseRequest,
    DenoiserBackend,
    KVRef,
    KVUnsupported,
    PromptCondition,
)
from .gaussian import GaussianBackend, gaussian_eps, gaussian_log_density
from .remote import (
    PROTOCOL_VERSION,
    BackendUnavailable,
    ProtocolVersionError,
    RemoteBackend,
    RemoteError,
    ServerError,
    StaleKVError,
    pack_envelope,
    unpack_envelope,
)
from .toyattn import ToyAttentionBackend, prompt_seed

__all__ = [
    "AttentionBundle",
    "BackendError",
    "BackendUnavailable",
    "DenoiseRequest",
    "DenoiserBackend",
    "GaussianBackend",
    "KVRef",
    "KVUnsupported",
    "PROTOCOL_VERSION",
    "PromptCondition",
    "ProtocolVersionError",
    "RemoteBackend",
    "RemoteError",
    "ServerError",
    "StaleKVError",
    "ToyAttentionBackend",
    "gaussian_eps",
    "gaussian_log_density",
    "pack_envelope",
    "prompt_seed",
    "unpack_envelope",
]
