"""texloom: view-consistent RGB texture synthesis for triangle meshes by
interleaving multi-view diffusion denoising with UV texture assembly."""

from .codec import CodecSpec, build_codec
from .guidance import (
    DenoiseOutput,
    GuidanceWeights,
    cfg_combine,
    disentangle_texture_condition,
    multi_cond_combine,
    omega2_schedule,
    texture_noise,
)
from .pipeline import PipelineError, RunConfig, RunResult, TexturePipeline
from .schedule import (
    ConfigError,
    ContractError,
    NoiseSchedule,
    SamplerConfig,
    build_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "CodecSpec",
    "ConfigError",
    "ContractError",
    "DenoiseOutput",
    "GuidanceWeights",
    "NoiseSchedule",
    "PipelineError",
    "RunConfig",
    "RunResult",
    "SamplerConfig",
    "TexturePipeline",
    "build_codec",
    "build_schedule",
    "cfg_combine",
    "disentangle_texture_condition",
    "multi_cond_combine",
    "omega2_schedule",
    "texture_noise",
    "__version__",
]
