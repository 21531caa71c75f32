"""Core geometric types and the two parametric building blocks:
bicubic height-field evaluation and 6D-to-matrix rotation decoding.

All functions here are pure and operate on immutable numpy values, so they
are safe to call from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, EmptyCloud

# Norms below this are treated as zero when orthonormalizing (double noise floor).
DEGENERACY_EPS = 1e-12


def as_points(points) -> np.ndarray:
    """Coerce to a finite (N, 3) float64 array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("points contain NaN or inf")
    return pts


class PointCloud:
    """An ordered set of 3D points; the universal I/O currency.

    Coordinates are stored as a read-only (N, 3) float64 array with N >= 1.
    """

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.ascontiguousarray(as_points(points))
        if len(pts) == 0:
            raise EmptyCloud("point cloud must contain at least one point")
        pts.setflags(write=False)
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} points)"

    @property
    def bbox_min(self) -> np.ndarray:
        return self.points.min(axis=0)

    @property
    def bbox_max(self) -> np.ndarray:
        return self.points.max(axis=0)

    @property
    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.bbox_max - self.bbox_min))

    def allclose(self, other: "PointCloud", atol: float = 0.0) -> bool:
        return self.points.shape == other.points.shape and np.allclose(
            self.points, other.points, rtol=0.0, atol=atol
        )


def decode_rotation(a1, a2) -> np.ndarray:
    """Decode the continuous 6D rotation representation into a 3x3 matrix.

    Gram-Schmidt: b1 = normalize(a1), b2 = normalize(a2 - (a2.b1) b1),
    b3 = b1 x b2; the result has columns [b1 b2 b3].

    Raises DegenerateInput when a1 is (near) zero or a2 is (near) parallel
    to a1.
    """
    R = decode_rotation_many(np.concatenate([np.asarray(a1, float).ravel(),
                                             np.asarray(a2, float).ravel()])[None, :])
    return R[0]


def decode_rotation_many(a6) -> np.ndarray:
    """Vectorized 6D decode: (N, 6) -> (N, 3, 3) rotation matrices."""
    a = np.asarray(a6, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 6:
        raise ValueError(f"expected (N, 6), got {a.shape}")
    a1 = a[:, :3]
    a2 = a[:, 3:]
    n1 = np.linalg.norm(a1, axis=1)
    if np.any(n1 < DEGENERACY_EPS):
        raise DegenerateInput("first 3-vector has (near-)zero norm")
    b1 = a1 / n1[:, None]
    proj = np.einsum("ij,ij->i", a2, b1)
    v2 = a2 - proj[:, None] * b1
    n2 = np.linalg.norm(v2, axis=1)
    if np.any(n2 < DEGENERACY_EPS):
        raise DegenerateInput("second 3-vector is (near-)parallel to the first")
    b2 = v2 / n2[:, None]
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=2)


def is_rotation(R, tol: float = 1e-12) -> bool:
    """Check RtR = I and det(R) = 1 within Frobenius tolerance."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        return False
    ortho = np.linalg.norm(R.T @ R - np.eye(3)) <= tol
    return bool(ortho and abs(np.linalg.det(R) - 1.0) <= tol)


def bicubic_embed(u, v) -> np.ndarray:
    """The 16 monomials u^i v^j, i, j in 0..3, v-major order.

    Entry 4*j + i is u^i v^j, matching the coefficient layout used by
    `bicubic_eval`: (1, u, u^2, u^3, v, u v, ..., u^3 v^3). Broadcasts over
    array-valued u, v and returns shape (..., 16).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u, v = np.broadcast_arrays(u, v)
    pu = np.stack([np.ones_like(u), u, u * u, u * u * u], axis=-1)
    pv = np.stack([np.ones_like(v), v, v * v, v * v * v], axis=-1)
    out = pv[..., :, None] * pu[..., None, :]
    return out.reshape(u.shape + (16,))


def bicubic_eval(coeffs, u, v):
    """Evaluate the bicubic height field w = sum_ij a_ij u^i v^j."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape[-1] != 16:
        raise ValueError("bicubic coefficients must have 16 entries")
    return bicubic_embed(u, v) @ c


@dataclass(frozen=True)
class LocalPatch:
    """One parent point's local surface model.

    The surface is origin + R (u s, v s, phi(u, v) s) with (u, v) measured
    in units of `scale`, the neighborhood radius used during fitting.
    """

    origin: np.ndarray   # (3,)
    rot: np.ndarray      # (3, 3), columns form the local frame
    coeffs: np.ndarray   # (16,) bicubic coefficients
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, float).reshape(3))
        object.__setattr__(self, "rot", np.asarray(self.rot, float).reshape(3, 3))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, float).reshape(16))
        if not self.scale > 0:
            raise ValueError("patch scale must be positive")
        if not is_rotation(self.rot, tol=1e-8):
            raise ValueError("patch frame is not a rotation matrix")


def patch_lift(patch: LocalPatch, du, dv) -> np.ndarray:
    """Lift plane offsets (du, dv) onto the patch surface in world space.

    Broadcasts over array inputs; returns shape (..., 3). The result lies
    exactly on the patch by construction.
    """
    du = np.asarray(du, dtype=np.float64)
    dv = np.asarray(dv, dtype=np.float64)
    w = bicubic_eval(patch.coeffs, du, dv)
    local = np.stack([du, dv, w], axis=-1) * patch.scale
    return patch.origin + local @ patch.rot.T
