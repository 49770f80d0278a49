#!/usr/bin/env python3
"""Regenerate the OBJ fixtures under tests/fixtures/.

The sphere uses an equal-area chart on a sub-square of the atlas and an
open bottom so that every occupied texel is observable from the standard
8-azimuth + top view set (with the long-lens capture pose used by the
coverage tests: radius 8, fov 16).
"""

from pathlib import Path

from texloom.geometry import save_obj, textured_cube, unit_quad, uv_sphere

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SPHERE_KWARGS = dict(
    n_azimuth=32,
    n_rings=16,
    chart_origin=(0.2, 0.2),
    chart_extent=0.5,
    open_bottom_rings=2,
)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    save_obj(unit_quad(), FIXTURES / "quad.obj")
    save_obj(textured_cube(), FIXTURES / "cube.obj")
    save_obj(uv_sphere(**SPHERE_KWARGS), FIXTURES / "sphere.obj")
    print(f"wrote quad.obj, cube.obj, sphere.obj to {FIXTURES}")


if __name__ == "__main__":
    main()
