"""Regenerate the bundled Delaunay mesh of the unit disc.

64 equally spaced boundary nodes and 381 interior nodes on a Vogel spiral give
2 * 381 + 64 - 2 = 824 triangles. The output is deterministic.

    python scripts/make_disc_mesh.py src/ma_spline/data/circle824
"""

import sys

import numpy as np
from scipy.spatial import Delaunay

from ma_spline.mesh import TriMesh, save_mesh

N_BOUNDARY = 64
N_INTERIOR = 381


def disc_points(nb: int = N_BOUNDARY, ni: int = N_INTERIOR) -> np.ndarray:
    theta = 2 * np.pi * np.arange(nb) / nb
    boundary = np.column_stack([np.cos(theta), np.sin(theta)])
    golden = np.pi * (3 - np.sqrt(5))
    k = np.arange(ni)
    # keep the outermost spiral ring about half a boundary spacing inside
    radius = (1 - 0.5 * np.pi / nb) * np.sqrt((k + 0.5) / ni)
    interior = np.column_stack([radius * np.cos(k * golden), radius * np.sin(k * golden)])
    return np.vstack([boundary, interior])


def main(stem: str) -> None:
    pts = disc_points()
    tri = Delaunay(pts)
    mesh = TriMesh.from_arrays(pts, tri.simplices)
    if len(mesh.triangles) != 824:
        raise SystemExit(f"expected 824 triangles, got {len(mesh.triangles)}")
    save_mesh(mesh, stem)
    print(f"{len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles, h = {mesh.h:.4f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "circle824")
