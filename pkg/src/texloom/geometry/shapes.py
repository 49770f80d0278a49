"""Procedural meshes with ready-made UV atlases, for fixtures and self-tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh, vertex_normals


def unit_quad(extent: float = 1.2) -> Mesh:
    """Two-triangle quad in the z=0 plane, UVs spanning the full atlas,
    front face toward +Z."""
    e = extent
    vertices = np.array(
        [[-e, -e, 0.0], [e, -e, 0.0], [e, e, 0.0], [-e, e, 0.0]]
    )
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    corner_uvs = np.array(
        [
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        ]
    )
    normals = np.tile([0.0, 0.0, 1.0], (4, 1))
    return Mesh(vertices, faces, corner_uvs, normals)


def textured_cube(half: float = 0.8, margin: float = 0.02) -> Mesh:
    """Axis-aligned cube, 8 shared positions, one UV island per face in a
    3x2 atlas grid."""
    h = half
    vertices = np.array(
        [
            [-h, -h, -h],
            [h, -h, -h],
            [h, h, -h],
            [-h, h, -h],
            [-h, -h, h],
            [h, -h, h],
            [h, h, h],
            [-h, h, h],
        ]
    )
    # Quads wound CCW seen from outside: (a, b, c, d).
    quads = [
        (4, 5, 6, 7),  # +Z
        (1, 0, 3, 2),  # -Z
        (5, 1, 2, 6),  # +X
        (0, 4, 7, 3),  # -X
        (7, 6, 2, 3),  # +Y
        (0, 1, 5, 4),  # -Y
    ]
    faces = []
    corner_uvs = []
    for island, (a, b, c, d) in enumerate(quads):
        col, row = island % 3, island // 3
        u0, u1 = col / 3 + margin, (col + 1) / 3 - margin
        v0, v1 = row / 2 + margin, (row + 1) / 2 - margin
        quad_uv = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
        faces.append([a, b, c])
        corner_uvs.append([quad_uv[0], quad_uv[1], quad_uv[2]])
        faces.append([a, c, d])
        corner_uvs.append([quad_uv[0], quad_uv[2], quad_uv[3]])
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    return Mesh(vertices, faces, np.asarray(corner_uvs), vertex_normals(vertices, faces))


def uv_sphere(
    n_azimuth: int = 32,
    n_rings: int = 16,
    radius: float = 1.0,
    chart_origin: tuple[float, float] = (0.0, 0.0),
    chart_extent: float = 1.0,
    open_bottom_rings: int = 0,
) -> Mesh:
    """Longitude/area sphere chart with a duplicated seam column; column 0
    faces +Z (the front view).

    The v coordinate uses the equal-area mapping v = (1 + cos(polar)) / 2 so
    texel area tracks surface area (polar caps do not hog texture rows). The
    chart can be confined to a sub-square of the atlas via chart_origin and
    chart_extent. open_bottom_rings leaves the lowest rings unmeshed: a
    bottom opening like that of a scanned object, so every remaining face is
    observable from a standard view ring plus top view.
    """
    rows = n_rings + 1
    cols = n_azimuth + 1
    vertices = np.zeros((rows * cols, 3))
    uvs_grid = np.zeros((rows * cols, 2))
    ox, oy = chart_origin
    for r in range(rows):
        polar = np.pi * r / n_rings
        v = (1.0 + np.cos(polar)) / 2.0
        for c in range(cols):
            az = 2.0 * np.pi * c / n_azimuth
            idx = r * cols + c
            vertices[idx] = radius * np.array(
                [np.sin(polar) * np.sin(az), np.cos(polar), np.sin(polar) * np.cos(az)]
            )
            uvs_grid[idx] = [ox + chart_extent * c / n_azimuth, oy + chart_extent * v]

    faces = []
    face_uvs = []

    def emit(i0: int, i1: int, i2: int) -> None:
        p0, p1, p2 = vertices[i0], vertices[i1], vertices[i2]
        if np.linalg.norm(np.cross(p1 - p0, p2 - p0)) < 1e-12:
            return
        # Wind outward: flip if the face normal points inward.
        normal = np.cross(p1 - p0, p2 - p0)
        centroid = (p0 + p1 + p2) / 3.0
        if np.dot(normal, centroid) < 0.0:
            i1, i2 = i2, i1
        faces.append([i0, i1, i2])
        face_uvs.append([uvs_grid[i0], uvs_grid[i1], uvs_grid[i2]])

    for r in range(n_rings - open_bottom_rings):
        for c in range(n_azimuth):
            tl = r * cols + c
            tr = r * cols + c + 1
            bl = (r + 1) * cols + c
            br = (r + 1) * cols + c + 1
            emit(tl, bl, br)
            emit(tl, br, tr)

    faces = np.asarray(faces, dtype=np.int64)
    normals = vertices / np.linalg.norm(vertices, axis=1, keepdims=True)
    return Mesh(vertices, faces, np.asarray(face_uvs), normals)


def save_obj(mesh: Mesh, path: str | Path, write_normals: bool = True) -> None:
    """Write a Mesh as a triangulated OBJ with deduplicated vt records."""
    path = Path(path)
    lines = ["# generated fixture"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    vt_index: dict[tuple[float, float], int] = {}
    face_vt = np.zeros((mesh.n_faces, 3), dtype=np.int64)
    for f_idx in range(mesh.n_faces):
        for c in range(3):
            key = (round(mesh.uvs[f_idx, c, 0], 9), round(mesh.uvs[f_idx, c, 1], 9))
            if key not in vt_index:
                vt_index[key] = len(vt_index)
                lines.append(f"vt {key[0]:.9g} {key[1]:.9g}")
            face_vt[f_idx, c] = vt_index[key]
    if write_normals:
        for n in mesh.normals:
            lines.append(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}")
    for f_idx in range(mesh.n_faces):
        refs = []
        for c in range(3):
            vi = mesh.faces[f_idx, c] + 1
            ti = face_vt[f_idx, c] + 1
            refs.append(f"{vi}/{ti}/{vi}" if write_normals else f"{vi}/{ti}")
        lines.append("f " + " ".join(refs))
    path.write_text("\n".join(lines) + "\n")
