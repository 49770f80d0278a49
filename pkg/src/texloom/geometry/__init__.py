from .camera import CameraPose, sample_views, symmetric_view_order
from .mesh import Mesh, MeshError, load_mesh, validate_atlas, vertex_normals
from .raster import RasterMap, depth_image, perspective_screen, rasterize, uv_to_texel
from .shapes import save_obj, textured_cube, unit_quad, uv_sphere
from .texture import TextureMap, downsample_mask, first_obs_mask, inverse_render, render

__all__ = [
    "CameraPose",
    "Mesh",
    "MeshError",
    "RasterMap",
    "TextureMap",
    "depth_image",
    "downsample_mask",
    "first_obs_mask",
    "inverse_render",
    "load_mesh",
    "perspective_screen",
    "rasterize",
    "render",
    "sample_views",
    "save_obj",
    "symmetric_view_order",
    "textured_cube",
    "unit_quad",
    "uv_sphere",
    "uv_to_texel",
    "validate_atlas",
    "vertex_normals",
]
