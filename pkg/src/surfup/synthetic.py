"""Analytic benchmark surfaces: seeded point samplers and reference
meshes for plane, sphere, cylinder, saddle, and torus.

Open surfaces get meshes that extend beyond the sampled region so that
points near the sampling boundary (and children generated past it) still
project onto the surface rather than onto a mesh edge.
"""

from __future__ import annotations

import numpy as np

from .geom_core import PointCloud
from .metrics import TriangleMesh

SHAPES = ("plane", "sphere", "cylinder", "saddle", "torus")

_TORUS_R = 1.0
_TORUS_r = 0.4


def sample_shape(name: str, n: int, seed: int = 0) -> PointCloud:
    """n seeded random samples on the named analytic surface."""
    rng = np.random.default_rng(seed)
    if name == "plane":
        xy = rng.uniform(-1.0, 1.0, (n, 2))
        pts = np.column_stack([xy, np.zeros(n)])
    elif name == "sphere":
        v = rng.standard_normal((n, 3))
        pts = v / np.linalg.norm(v, axis=1, keepdims=True)
    elif name == "cylinder":
        ang = rng.uniform(0.0, 2 * np.pi, n)
        z = rng.uniform(-1.0, 1.0, n)
        pts = np.column_stack([np.cos(ang), np.sin(ang), z])
    elif name == "saddle":
        xy = rng.uniform(-1.0, 1.0, (n, 2))
        pts = np.column_stack([xy, xy[:, 0] ** 2 - xy[:, 1] ** 2])
    elif name == "torus":
        # rejection sampling for area-uniform samples on the torus
        pts = np.empty((0, 3))
        while len(pts) < n:
            u = rng.uniform(0.0, 2 * np.pi, 2 * n)
            v = rng.uniform(0.0, 2 * np.pi, 2 * n)
            keep = rng.uniform(0.0, 1.0, 2 * n) <= (
                (_TORUS_R + _TORUS_r * np.cos(v)) / (_TORUS_R + _TORUS_r))
            u, v = u[keep], v[keep]
            new = np.column_stack([
                (_TORUS_R + _TORUS_r * np.cos(v)) * np.cos(u),
                (_TORUS_R + _TORUS_r * np.cos(v)) * np.sin(u),
                _TORUS_r * np.sin(v)])
            pts = np.vstack([pts, new])
        pts = pts[:n]
    else:
        raise ValueError(f"unknown shape {name!r}; options: {SHAPES}")
    return PointCloud(pts)


def _grid_faces(nu: int, nv: int, wrap_u=False, wrap_v=False):
    """Triangulate an (nu x nv) vertex grid, optionally wrapping."""
    faces = []
    mu = nu if wrap_u else nu - 1
    mv = nv if wrap_v else nv - 1
    for i in range(mu):
        i2 = (i + 1) % nu
        for j in range(mv):
            j2 = (j + 1) % nv
            a, b, c, d = i * nv + j, i2 * nv + j, i2 * nv + j2, i * nv + j2
            faces.append((a, b, c))
            faces.append((a, c, d))
    return np.array(faces, dtype=np.intp)


def shape_mesh(name: str, resolution: int = 96) -> TriangleMesh:
    """Reference mesh for the named surface."""
    if name == "plane":
        s = 3.0  # larger than the sampled square
        verts = np.array([[-s, -s, 0], [s, -s, 0], [s, s, 0], [-s, s, 0]], float)
        faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.intp)
        return TriangleMesh(verts, faces)
    if name == "sphere":
        return _uv_sphere(resolution)
    if name == "cylinder":
        nu, nv = resolution, resolution // 2
        ang = 2 * np.pi * np.arange(nu) / nu
        z = np.linspace(-1.5, 1.5, nv)
        A, Z = np.meshgrid(ang, z, indexing="ij")
        verts = np.column_stack([np.cos(A).ravel(), np.sin(A).ravel(), Z.ravel()])
        return TriangleMesh(verts, _grid_faces(nu, nv, wrap_u=True))
    if name == "saddle":
        nu = resolution // 2
        x = np.linspace(-1.5, 1.5, nu)
        X, Y = np.meshgrid(x, x, indexing="ij")
        verts = np.column_stack([X.ravel(), Y.ravel(), (X ** 2 - Y ** 2).ravel()])
        return TriangleMesh(verts, _grid_faces(nu, nu))
    if name == "torus":
        nu, nv = resolution, resolution // 2
        u = 2 * np.pi * np.arange(nu) / nu
        v = 2 * np.pi * np.arange(nv) / nv
        U, V = np.meshgrid(u, v, indexing="ij")
        verts = np.column_stack([
            ((_TORUS_R + _TORUS_r * np.cos(V)) * np.cos(U)).ravel(),
            ((_TORUS_R + _TORUS_r * np.cos(V)) * np.sin(U)).ravel(),
            (_TORUS_r * np.sin(V)).ravel()])
        return TriangleMesh(verts, _grid_faces(nu, nv, wrap_u=True, wrap_v=True))
    raise ValueError(f"unknown shape {name!r}; options: {SHAPES}")


def _uv_sphere(resolution: int) -> TriangleMesh:
    nu = resolution                  # longitudes
    nv = resolution // 2             # latitudes between the poles
    lat = np.linspace(-np.pi / 2, np.pi / 2, nv + 2)[1:-1]
    lon = 2 * np.pi * np.arange(nu) / nu
    LO, LA = np.meshgrid(lon, lat, indexing="ij")
    band = np.column_stack([
        (np.cos(LA) * np.cos(LO)).ravel(),
        (np.cos(LA) * np.sin(LO)).ravel(),
        np.sin(LA).ravel()])
    verts = np.vstack([band, [[0, 0, -1.0]], [[0, 0, 1.0]]])
    faces = list(_grid_faces(nu, nv, wrap_u=True))
    south, north = len(band), len(band) + 1
    for i in range(nu):
        i2 = (i + 1) % nu
        faces.append((south, i2 * nv, i * nv))
        faces.append((north, i * nv + nv - 1, i2 * nv + nv - 1))
    return TriangleMesh(verts, np.array(faces, dtype=np.intp))
