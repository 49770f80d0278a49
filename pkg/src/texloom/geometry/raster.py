"""Software z-buffer rasterizer producing per-pixel texel lookups.

Each valid pixel records the nearest texel (from perspective-correct UV
interpolation), its view-space depth, and the grazing-angle cosine. The
fill rule is: pixel center inside the screen triangle (edge functions
>= 0 after back-face culling); depth ties keep the earliest face, so
output is deterministic for a fixed mesh and pose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraPose
from .mesh import Mesh

NEAR_PLANE = 1e-3


@dataclass
class RasterMap:
    """Per-pixel geometry buffer for one camera."""

    texel_id: np.ndarray  # (H, W) int64, -1 where invalid
    depth: np.ndarray  # (H, W) float64, view-space distance, inf where invalid
    cos_angle: np.ndarray  # (H, W) float64 in [0, 1]
    valid: np.ndarray  # (H, W) bool
    tex_resolution: int

    @property
    def resolution(self) -> int:
        return self.valid.shape[0]


def uv_to_texel(u, v, tex_resolution: int):
    """Nearest texel of a UV coordinate; row-major id = ty * res + tx.

    Texture rows follow image convention: v = 0 is the top texel row.
    """
    tx = np.clip(np.floor(np.asarray(u) * tex_resolution).astype(np.int64), 0, tex_resolution - 1)
    ty = np.clip(
        np.floor((1.0 - np.asarray(v)) * tex_resolution).astype(np.int64), 0, tex_resolution - 1
    )
    return ty * tex_resolution + tx


def perspective_screen(pose: CameraPose, points: np.ndarray):
    """Project world points to (screen_xy, view_depth).

    Screen coordinates are in pixels with pixel (row i, col j) centered at
    (j + 0.5, i + 0.5); rows grow downward.
    """
    res = pose.resolution
    view = pose.view_matrix()
    p = np.concatenate([points, np.ones((len(points), 1))], axis=1) @ view.T
    depth = -p[:, 2]
    f = 1.0 / np.tan(np.deg2rad(pose.fov) / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ndc_x = f * p[:, 0] / depth
        ndc_y = f * p[:, 1] / depth
    sx = (ndc_x + 1.0) * 0.5 * res
    sy = (1.0 - ndc_y) * 0.5 * res
    return np.stack([sx, sy], axis=1), depth


def rasterize(mesh: Mesh, pose: CameraPose, tex_resolution: int) -> RasterMap:
    res = pose.resolution
    texel_id = np.full((res, res), -1, dtype=np.int64)
    depth_buf = np.full((res, res), np.inf, dtype=np.float64)
    cos_buf = np.zeros((res, res), dtype=np.float64)

    screen, vdepth = perspective_screen(pose, mesh.vertices)
    eye = pose.position

    for f_idx in range(mesh.n_faces):
        vids = mesh.faces[f_idx]
        zs = vdepth[vids]
        if np.any(zs <= NEAR_PLANE):
            continue
        tri = screen[vids]  # (3, 2)
        # Back-face culling: with y down, a front-facing (CCW in world) face
        # projects with negative signed area.
        area2 = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (
            tri[1, 1] - tri[0, 1]
        ) * (tri[2, 0] - tri[0, 0])
        if area2 >= 0.0:
            continue

        lo_x = max(int(np.floor(tri[:, 0].min() - 0.5)), 0)
        hi_x = min(int(np.ceil(tri[:, 0].max() + 0.5)), res)
        lo_y = max(int(np.floor(tri[:, 1].min() - 0.5)), 0)
        hi_y = min(int(np.ceil(tri[:, 1].max() + 0.5)), res)
        if hi_x <= lo_x or hi_y <= lo_y:
            continue

        px = np.arange(lo_x, hi_x) + 0.5
        py = np.arange(lo_y, hi_y) + 0.5
        gx, gy = np.meshgrid(px, py)
        w0 = (tri[2, 0] - tri[1, 0]) * (gy - tri[1, 1]) - (tri[2, 1] - tri[1, 1]) * (gx - tri[1, 0])
        w1 = (tri[0, 0] - tri[2, 0]) * (gy - tri[2, 1]) - (tri[0, 1] - tri[2, 1]) * (gx - tri[2, 0])
        w2 = (tri[1, 0] - tri[0, 0]) * (gy - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (gx - tri[0, 0])
        inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        if not inside.any():
            continue

        lam0 = w0[inside] / area2
        lam1 = w1[inside] / area2
        lam2 = w2[inside] / area2
        inv_z = lam0 / zs[0] + lam1 / zs[1] + lam2 / zs[2]
        pix_depth = 1.0 / inv_z

        iy, ix = np.nonzero(inside)
        rows = lo_y + iy
        cols = lo_x + ix
        closer = pix_depth < depth_buf[rows, cols]
        if not closer.any():
            continue
        rows, cols = rows[closer], cols[closer]
        pix_depth = pix_depth[closer]

        # Perspective-correct corner weights.
        b0 = (lam0[closer] / zs[0]) * pix_depth
        b1 = (lam1[closer] / zs[1]) * pix_depth
        b2 = (lam2[closer] / zs[2]) * pix_depth

        uv = mesh.uvs[f_idx]
        u = b0 * uv[0, 0] + b1 * uv[1, 0] + b2 * uv[2, 0]
        v = b0 * uv[0, 1] + b1 * uv[1, 1] + b2 * uv[2, 1]

        n = mesh.normals[vids]
        nx = b0 * n[0, 0] + b1 * n[1, 0] + b2 * n[2, 0]
        ny = b0 * n[0, 1] + b1 * n[1, 1] + b2 * n[2, 1]
        nz = b0 * n[0, 2] + b1 * n[1, 2] + b2 * n[2, 2]
        nlen = np.sqrt(nx * nx + ny * ny + nz * nz)
        nlen[nlen == 0.0] = 1.0

        pts = (
            b0[:, None] * mesh.vertices[vids[0]]
            + b1[:, None] * mesh.vertices[vids[1]]
            + b2[:, None] * mesh.vertices[vids[2]]
        )
        to_eye = eye[None, :] - pts
        to_eye /= np.linalg.norm(to_eye, axis=1, keepdims=True)
        cosang = np.abs(nx * to_eye[:, 0] + ny * to_eye[:, 1] + nz * to_eye[:, 2]) / nlen

        depth_buf[rows, cols] = pix_depth
        texel_id[rows, cols] = uv_to_texel(u, v, tex_resolution)
        cos_buf[rows, cols] = np.clip(cosang, 0.0, 1.0)

    valid = texel_id >= 0
    return RasterMap(texel_id, depth_buf, cos_buf, valid, tex_resolution)


def depth_image(raster: RasterMap) -> np.ndarray:
    """Normalized single-channel depth map for backend conditioning.

    Valid pixels map to (far - d) / (far - near) so nearer is brighter;
    background is 0. Opaque to the engine beyond this construction.
    """
    out = np.zeros(raster.valid.shape, dtype=np.float64)
    if raster.valid.any():
        d = raster.depth[raster.valid]
        near, far = d.min(), d.max()
        span = far - near if far > near else 1.0
        out[raster.valid] = (far - d) / span
    return out
