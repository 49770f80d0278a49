"""RGB texel grid with coverage bookkeeping, plus the image<->texture
scatter/gather pair.

Gather (render) and scatter (inverse_render) both use nearest-texel
addressing so that render(inverse_render(render(tex))) is bitwise equal to
render(tex) on valid pixels. Scatter is first-write-wins: a covered texel
is never overwritten, which makes per-view baking idempotent and gives each
texel exactly one writing view per assembly pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..schedule import ContractError
from .raster import RasterMap


@dataclass
class TextureMap:
    resolution: int
    background: tuple[float, float, float] = (0.5, 0.5, 0.5)
    texels: np.ndarray = field(init=False)
    covered: np.ndarray = field(init=False)
    writer_view: np.ndarray = field(init=False)

    def __post_init__(self):
        r = self.resolution
        self.texels = np.empty((r, r, 3), dtype=np.float64)
        self.texels[:] = np.asarray(self.background, dtype=np.float64)
        self.covered = np.zeros((r, r), dtype=bool)
        self.writer_view = np.full((r, r), -1, dtype=np.int64)

    @property
    def n_texels(self) -> int:
        return self.resolution * self.resolution

    def coverage_fraction(self) -> float:
        return float(self.covered.mean())

    def flat_texels(self) -> np.ndarray:
        return self.texels.reshape(-1, 3)

    def flat_covered(self) -> np.ndarray:
        return self.covered.reshape(-1)

    def copy(self) -> "TextureMap":
        dup = TextureMap(self.resolution, self.background)
        dup.texels = self.texels.copy()
        dup.covered = self.covered.copy()
        dup.writer_view = self.writer_view.copy()
        return dup


def render(
    texture: TextureMap, raster: RasterMap, background: tuple[float, float, float] | None = None
) -> np.ndarray:
    """Gather texel colors through the raster map; invalid pixels and
    uncovered texels show the background color."""
    if raster.tex_resolution != texture.resolution:
        raise ContractError(
            f"raster texel ids target a {raster.tex_resolution}^2 texture, "
            f"texture is {texture.resolution}^2"
        )
    bg = np.asarray(background if background is not None else texture.background, dtype=np.float64)
    res = raster.resolution
    img = np.empty((res, res, 3), dtype=np.float64)
    img[:] = bg
    ids = raster.texel_id[raster.valid]
    colors = texture.flat_texels()[ids]
    colors[~texture.flat_covered()[ids]] = bg
    img[raster.valid] = colors
    return img


def inverse_render(
    image: np.ndarray,
    raster: RasterMap,
    texture: TextureMap,
    view_index: int,
    min_cos: float = 0.0,
) -> TextureMap:
    """Scatter pixel colors back to their source texels (first write wins).

    Pixels seen at a grazing angle below min_cos are skipped; the caller may
    run a second pass with min_cos=0 to fill texels no view saw head-on.
    Mutates and returns the texture.
    """
    if image.shape[:2] != raster.valid.shape:
        raise ContractError(f"image shape {image.shape[:2]} != raster shape {raster.valid.shape}")
    use = raster.valid if min_cos <= 0.0 else raster.valid & (raster.cos_angle >= min_cos)
    ids = raster.texel_id[use]
    colors = image[use]
    covered = texture.flat_covered()
    # Row-major pixel order; keep each texel's first uncovered hit.
    fresh = _first_occurrence(ids) & ~covered[ids]
    ids = ids[fresh]
    texture.flat_texels()[ids] = colors[fresh]
    covered[ids] = True
    texture.writer_view.reshape(-1)[ids] = view_index
    return texture


def _first_occurrence(ids: np.ndarray) -> np.ndarray:
    """Mask selecting the first occurrence of each id, preserving order."""
    _, first_idx = np.unique(ids, return_index=True)
    mask = np.zeros(ids.shape, dtype=bool)
    mask[first_idx] = True
    return mask


def first_obs_mask(raster: RasterMap, texture: TextureMap) -> np.ndarray:
    """Image-space mask of pixels whose texel no earlier view has written.

    True means generate-fresh: the pixel's content is unconstrained by the
    partial texture.
    """
    mask = np.zeros(raster.valid.shape, dtype=bool)
    covered = texture.flat_covered()
    mask[raster.valid] = ~covered[raster.texel_id[raster.valid]]
    return mask


def downsample_mask(mask: np.ndarray, factor: int) -> np.ndarray:
    """Block-reduce a boolean image; a cell is True iff ANY pixel in its
    block is True (generation-greedy: never freeze an unobserved pixel)."""
    if factor == 1:
        return mask.copy()
    h, w = mask.shape
    if h % factor or w % factor:
        raise ContractError(f"mask dims {h}x{w} not divisible by factor {factor}")
    return mask.reshape(h // factor, factor, w // factor, factor).any(axis=(1, 3))
