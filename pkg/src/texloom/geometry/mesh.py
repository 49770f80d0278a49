"""Triangulated mesh container and Wavefront OBJ loading.

Meshes must arrive with a UV atlas (``vt`` records referenced by every
face); the loader validates that UV islands do not overlap. Vertex normals
are taken from ``vn`` records when present and derived from face geometry
otherwise.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Mesh failed to parse or violates a structural requirement."""


@dataclass
class Mesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) vertex indices
    uvs: np.ndarray  # (F, 3, 2) per-corner UV coordinates in [0,1]^2
    normals: np.ndarray  # (V, 3) unit vectors
    uv_indices: np.ndarray | None = None  # (F, 3) original vt indices, if loaded

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.uvs = np.asarray(self.uvs, dtype=np.float64)
        if self.normals is None:
            self.normals = vertex_normals(self.vertices, self.faces)
        self.normals = np.asarray(self.normals, dtype=np.float64)
        nv = len(self.vertices)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be (F, 3) vertex-index triples")
        if np.any(self.faces < 0) or np.any(self.faces >= nv):
            raise MeshError("face vertex index out of range")
        if self.uvs.shape != (len(self.faces), 3, 2):
            raise MeshError("uvs must be (F, 3, 2) per-corner coordinates")
        lengths = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-4):
            raise MeshError("vertex normals must be unit length within 1e-4")

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def normalized(self, target_radius: float = 1.0) -> "Mesh":
        """Copy with vertices centered and scaled to fit a bounding sphere."""
        center = 0.5 * (self.vertices.min(axis=0) + self.vertices.max(axis=0))
        shifted = self.vertices - center
        radius = np.linalg.norm(shifted, axis=1).max()
        scale = target_radius / radius if radius > 0 else 1.0
        return Mesh(shifted * scale, self.faces, self.uvs, self.normals, self.uv_indices)


def vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted face-normal accumulation, normalized per vertex."""
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    fn = np.cross(v1 - v0, v2 - v0)  # length = 2 * area
    normals = np.zeros_like(vertices)
    for corner in range(3):
        np.add.at(normals, faces[:, corner], fn)
    return _unit_or_placeholder(normals)


def _unit_or_placeholder(acc: np.ndarray) -> np.ndarray:
    """Normalize accumulated normals; vertices no face references get +Z."""
    lengths = np.linalg.norm(acc, axis=1, keepdims=True)
    out = np.divide(acc, lengths, out=np.zeros_like(acc), where=lengths > 0)
    out[lengths[:, 0] == 0.0] = (0.0, 0.0, 1.0)
    return out


def load_mesh(path: str | Path) -> Mesh:
    """Parse a triangulated OBJ with per-corner UVs into a Mesh.

    Faces without ``vt`` references are an error (no UV atlas); quads or
    larger polygons are rejected; non-manifold edges only warn.
    """
    path = Path(path)
    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    normals_in: list[list[float]] = []
    face_v: list[list[int]] = []
    face_vt: list[list[int]] = []
    face_vn: list[list[int]] = []

    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                positions.append([float(x) for x in parts[1:4]])
            elif tag == "vt":
                texcoords.append([float(parts[1]), float(parts[2])])
            elif tag == "vn":
                normals_in.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                corners = parts[1:]
                if len(corners) != 3:
                    raise MeshError(
                        f"{path.name}:{lineno}: face has {len(corners)} corners; mesh must be triangulated"
                    )
                vi, ti, ni = [], [], []
                for corner in corners:
                    fields = corner.split("/")
                    vi.append(int(fields[0]) - 1)
                    if len(fields) > 1 and fields[1]:
                        ti.append(int(fields[1]) - 1)
                    if len(fields) > 2 and fields[2]:
                        ni.append(int(fields[2]) - 1)
                if len(ti) != 3:
                    raise MeshError(f"{path.name}:{lineno}: mesh has no UV atlas (face lacks vt)")
                face_v.append(vi)
                face_vt.append(ti)
                if len(ni) == 3:
                    face_vn.append(ni)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, MeshError):
                raise
            raise MeshError(f"{path.name}:{lineno}: cannot parse {line!r}") from exc

    if not face_v:
        raise MeshError(f"{path.name}: no faces found")
    if not texcoords:
        raise MeshError(f"{path.name}: mesh has no UV atlas (no vt records)")

    vertices = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(face_v, dtype=np.int64)
    vt = np.asarray(texcoords, dtype=np.float64)
    uv_idx = np.asarray(face_vt, dtype=np.int64)
    if np.any(uv_idx < 0) or np.any(uv_idx >= len(vt)):
        raise MeshError(f"{path.name}: vt index out of range")
    uvs = vt[uv_idx]

    if len(face_vn) == len(face_v) and normals_in:
        vn = np.asarray(normals_in, dtype=np.float64)
        acc = np.zeros_like(vertices)
        for f_idx, corners in enumerate(face_vn):
            for c in range(3):
                acc[faces[f_idx, c]] += vn[corners[c]]
        normals = _unit_or_placeholder(acc)
    else:
        normals = vertex_normals(vertices, faces)

    _warn_non_manifold(faces, path.name)
    mesh = Mesh(vertices, faces, uvs, normals, uv_indices=uv_idx)
    validate_atlas(mesh)
    return mesh


def _warn_non_manifold(faces: np.ndarray, name: str) -> None:
    edges = Counter()
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            edges[tuple(sorted(e))] += 1
    worst = max(edges.values()) if edges else 0
    if worst > 2:
        logger.warning("%s: non-manifold mesh (an edge is shared by %d faces)", name, worst)


def validate_atlas(mesh: Mesh, resolution: int = 256) -> None:
    """Reject meshes whose UV islands overlap.

    Samples texel centers at the given resolution; a texel strictly interior
    to two faces that share no vt index means two islands claim the same
    texture area.
    """
    if np.any(mesh.uvs < -1e-9) or np.any(mesh.uvs > 1.0 + 1e-9):
        raise MeshError("UV coordinates must lie in [0,1]^2")
    owner = np.full((resolution, resolution), -1, dtype=np.int64)
    for f_idx in range(mesh.n_faces):
        tri = mesh.uvs[f_idx] * resolution  # texel units
        lo = np.maximum(np.floor(tri.min(axis=0)).astype(int), 0)
        hi = np.minimum(np.ceil(tri.max(axis=0)).astype(int), resolution)
        if np.any(hi <= lo):
            continue
        xs = np.arange(lo[0], hi[0]) + 0.5
        ys = np.arange(lo[1], hi[1]) + 0.5
        px, py = np.meshgrid(xs, ys)
        w0, w1, w2, area2 = _edge_functions(tri, px, py)
        if area2 == 0.0:
            continue
        margin = 1e-7 * abs(area2)
        if area2 < 0:
            inside = (w0 < -margin) & (w1 < -margin) & (w2 < -margin)
        else:
            inside = (w0 > margin) & (w1 > margin) & (w2 > margin)
        iy, ix = np.nonzero(inside)
        tx = (lo[0] + ix).astype(int)
        ty = (lo[1] + iy).astype(int)
        prev = owner[ty, tx]
        clash = prev >= 0
        if np.any(clash):
            for other in np.unique(prev[clash]):
                if not _share_uv(mesh, int(other), f_idx):
                    raise MeshError(
                        f"UV atlas overlap: faces {other} and {f_idx} cover the same texels"
                    )
        owner[ty, tx] = f_idx


def atlas_occupancy(mesh: Mesh, resolution: int) -> np.ndarray:
    """Boolean texel grid marking texels whose center lies inside some UV
    face. Rows follow texture/image convention: v = 1 is row 0."""
    occupied = np.zeros((resolution, resolution), dtype=bool)
    for f_idx in range(mesh.n_faces):
        tri = mesh.uvs[f_idx].copy()
        tri[:, 0] *= resolution
        tri[:, 1] = (1.0 - tri[:, 1]) * resolution
        lo = np.maximum(np.floor(tri.min(axis=0)).astype(int), 0)
        hi = np.minimum(np.ceil(tri.max(axis=0)).astype(int), resolution)
        if np.any(hi <= lo):
            continue
        xs = np.arange(lo[0], hi[0]) + 0.5
        ys = np.arange(lo[1], hi[1]) + 0.5
        px, py = np.meshgrid(xs, ys)
        w0, w1, w2, area2 = _edge_functions(tri, px, py)
        if area2 == 0.0:
            continue
        sign = 1.0 if area2 > 0 else -1.0
        inside = (sign * w0 >= 0) & (sign * w1 >= 0) & (sign * w2 >= 0)
        iy, ix = np.nonzero(inside)
        occupied[lo[1] + iy, lo[0] + ix] = True
    return occupied


def _share_uv(mesh: Mesh, fa: int, fb: int) -> bool:
    if mesh.uv_indices is not None:
        return bool(set(mesh.uv_indices[fa]) & set(mesh.uv_indices[fb]))
    ua = {tuple(np.round(p, 9)) for p in mesh.uvs[fa]}
    ub = {tuple(np.round(p, 9)) for p in mesh.uvs[fb]}
    return bool(ua & ub)


def _edge_functions(tri: np.ndarray, px: np.ndarray, py: np.ndarray):
    """Barycentric edge functions of a 2-D triangle at the given points."""
    (x0, y0), (x1, y1), (x2, y2) = tri
    w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
    w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    return w0, w1, w2, area2
