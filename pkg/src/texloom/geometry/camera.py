"""Camera poses on a view sphere looking at the origin.

World conventions: +Y is up; azimuth 0, elevation 0 places the camera on
the +Z axis (the front/reference view). The optional top view sits at 85
degrees elevation rather than 90 to avoid the look-at degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schedule import ConfigError

TOP_VIEW_ELEVATION = 85.0


@dataclass(frozen=True)
class CameraPose:
    azimuth: float  # degrees around +Y, 0 = +Z axis
    elevation: float  # degrees above the XZ plane
    radius: float
    fov: float = 50.0  # vertical field of view, degrees
    resolution: int = 512

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError(f"camera radius must be > 0, got {self.radius}")
        if self.resolution <= 0:
            raise ConfigError(f"camera resolution must be > 0, got {self.resolution}")

    @property
    def position(self) -> np.ndarray:
        az = np.deg2rad(self.azimuth)
        el = np.deg2rad(self.elevation)
        return self.radius * np.array(
            [np.sin(az) * np.cos(el), np.sin(el), np.cos(az) * np.cos(el)]
        )

    def view_matrix(self) -> np.ndarray:
        """4x4 world-to-view transform; the camera looks down -Z in view space."""
        eye = self.position
        forward = -eye / np.linalg.norm(eye)  # toward origin
        up = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up)
        right /= np.linalg.norm(right)
        true_up = np.cross(right, forward)
        m = np.eye(4)
        m[0, :3] = right
        m[1, :3] = true_up
        m[2, :3] = -forward
        m[:3, 3] = -m[:3, :3] @ eye
        return m


def sample_views(
    n_azimuth: int,
    add_top: bool = True,
    radius: float = 2.2,
    fov: float = 50.0,
    resolution: int = 512,
) -> list[CameraPose]:
    """Ring of n_azimuth zero-elevation poses at azimuths k*360/n starting
    from the front view (azimuth 0), plus an optional top view last."""
    if n_azimuth < 1:
        raise ConfigError(f"n_azimuth must be >= 1, got {n_azimuth}")
    poses = [
        CameraPose(k * 360.0 / n_azimuth, 0.0, radius, fov, resolution)
        for k in range(n_azimuth)
    ]
    if add_top:
        poses.append(CameraPose(0.0, TOP_VIEW_ELEVATION, radius, fov, resolution))
    return poses


def symmetric_view_order(n_azimuth: int, add_top: bool) -> list[int]:
    """Sweep permutation: front first, then alternating +/- azimuth outward
    (0, 45, 315, 90, 270, ...), top last, as indices into sample_views output.

    Growing the covered region symmetrically around the reference view keeps
    assembly seams short.
    """
    order = [0]
    for step in range(1, n_azimuth // 2 + 1):
        order.append(step)
        if step != n_azimuth - step:
            order.append(n_azimuth - step)
    order = order[:n_azimuth]
    if add_top:
        order.append(n_azimuth)
    return order
