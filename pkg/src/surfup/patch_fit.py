"""Local surface estimation: PCA projection-plane selection and bicubic
least-squares fitting over k-NN neighborhoods.

The plane is chosen so that the out-of-plane coordinate of the neighbors
has minimal variance (second moments taken about the parent point, not the
centroid, so the fitted patch stays anchored to the parent). Coefficients
come from ridge-regularized normal equations in scale-normalized
coordinates; the tiny ridge (1e-10) guarantees a unique solution even with
fewer neighbors than the 16 unknowns while leaving exactly representable
surfaces (planes, quadratics) recoverable to well below 1e-6.

A batched path (`fit_patches_arrays`) fits all parents of a cloud at once
with stacked 3x3 eigendecompositions and 16x16 solves; the scalar API wraps
the same code so both give identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNeighborhood
from .geom_core import LocalPatch, PointCloud, bicubic_embed
from .spatial_index import KnnIndex

RIDGE_DEFAULT = 1e-10
# relative eigenvalue threshold below which a covariance direction counts as rank-deficient
_RANK_EPS = 1e-12


@dataclass(frozen=True)
class Neighborhood:
    """A parent point plus its k neighbors as offsets from the parent."""

    center: np.ndarray    # (3,)
    offsets: np.ndarray   # (k, 3)
    scale: float          # distance to the k-th neighbor

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float).reshape(3))
        object.__setattr__(self, "offsets", np.asarray(self.offsets, float).reshape(-1, 3))
        if len(self.offsets) < 3:
            raise ValueError("neighborhood needs at least 3 points")
        if not self.scale > 0:
            raise ValueError("neighborhood scale must be positive")


@dataclass(frozen=True)
class FitReport:
    """Result of fitting one parent's patch.

    rms_residual is the post-fit RMS of the out-of-plane residuals and
    displacement_loss the pre-fit mean squared out-of-plane coordinate,
    both in scale units.
    """

    patch: LocalPatch
    rms_residual: float
    displacement_loss: float


def frames_from_covariance(cov):
    """Stacked 3x3 symmetric eigendecomposition with a fixed sign convention.

    cov: (N, 3, 3). Returns (frames, eigvals): frames (N, 3, 3) with columns
    ordered by descending eigenvalue; the third column (smallest variance
    direction) is flipped to have non-negative dot with +z, falling back to
    +y then +x on ties, and the first column is flipped if needed so
    det = +1. eigvals is (N, 3), descending.
    """
    cov = np.asarray(cov, dtype=np.float64)
    evals, evecs = np.linalg.eigh(cov)        # ascending
    evals = evals[:, ::-1]
    frames = evecs[:, :, ::-1].copy()
    w = frames[:, :, 2]
    tol = 1e-12
    sgn = np.where(np.abs(w[:, 2]) > tol, np.sign(w[:, 2]),
                   np.where(np.abs(w[:, 1]) > tol, np.sign(w[:, 1]),
                            np.where(w[:, 0] >= 0, 1.0, -1.0)))
    sgn = np.where(sgn == 0, 1.0, sgn)
    frames[:, :, 2] *= sgn[:, None]
    det = np.linalg.det(frames)
    frames[:, :, 0] *= np.where(det < 0, -1.0, 1.0)[:, None]
    return frames, evals


def pca_frame(nbh: Neighborhood) -> np.ndarray:
    """Projection-plane frame for a neighborhood.

    Columns are covariance eigenvectors (eigenvalues descending); the third
    column is the minimal-variance direction, i.e. the best local normal.
    Raises DegenerateNeighborhood when all neighbors coincide with the
    parent (covariance rank 0).
    """
    off = nbh.offsets
    cov = (off.T @ off) / len(off)
    frames, evals = frames_from_covariance(cov[None])
    if evals[0, 0] <= 1e-300:
        raise DegenerateNeighborhood("all neighbors coincide with the parent")
    return frames[0]


def fit_bicubic(nbh: Neighborhood, frame, ridge: float = RIDGE_DEFAULT):
    """Ridge least-squares bicubic fit of the neighborhood in the given frame.

    Neighbors are expressed in the frame and divided by the neighborhood
    scale before fitting. Returns (coeffs, rms_residual).
    """
    local = (nbh.offsets @ np.asarray(frame, float)) / nbh.scale
    coeffs, rms = _solve_bicubic(local[None, :, 0], local[None, :, 1],
                                 local[None, :, 2], ridge)
    return coeffs[0], float(rms[0])


def _solve_bicubic(U, V, W, ridge):
    """Batched normal-equations solve; U, V, W are (..., k)."""
    A = bicubic_embed(U, V)                      # (..., k, 16)
    AtA = np.einsum("...ki,...kj->...ij", A, A)
    AtA += ridge * np.eye(16)
    Atw = np.einsum("...ki,...k->...i", A, W)
    coeffs = np.linalg.solve(AtA, Atw[..., None])[..., 0]
    resid = np.einsum("...ki,...i->...k", A, coeffs) - W
    rms = np.sqrt(np.mean(resid * resid, axis=-1))
    return coeffs, rms


def neighborhood_of(cloud: PointCloud, index: KnnIndex, point_index: int,
                    k: int) -> Neighborhood:
    """The k-NN neighborhood of one cloud point (the point itself included)."""
    idx, d = index.knn_many(cloud.points[point_index].reshape(1, 3), k)
    scale = float(d[0, -1])
    if scale <= 0:
        raise DegenerateNeighborhood("k nearest neighbors all coincide")
    offsets = cloud.points[idx[0]] - cloud.points[point_index]
    return Neighborhood(cloud.points[point_index], offsets, scale)


def fit_patch(cloud: PointCloud, index: KnnIndex, point_index: int,
              k: int, ridge: float = RIDGE_DEFAULT) -> FitReport:
    """Fit one parent's local patch: PCA frame + bicubic least squares."""
    nbh = neighborhood_of(cloud, index, point_index, k)
    off = nbh.offsets
    cov = (off.T @ off) / len(off)
    frames, evals = frames_from_covariance(cov[None])
    if evals[0, 1] <= max(evals[0, 0] * _RANK_EPS, 1e-300):
        raise DegenerateNeighborhood("neighborhood covariance has rank < 2")
    frame = frames[0]
    coeffs, rms = fit_bicubic(nbh, frame, ridge)
    w = (off @ frame[:, 2]) / nbh.scale
    disp = float(np.mean(w * w))
    patch = LocalPatch(origin=cloud.points[point_index], rot=frame,
                       coeffs=coeffs, scale=nbh.scale)
    return FitReport(patch=patch, rms_residual=rms, displacement_loss=disp)


def fit_patches_arrays(cloud: PointCloud, index: KnnIndex, k: int,
                       ridge: float = RIDGE_DEFAULT):
    """Fit every point's patch in one batched pass.

    Returns a dict of stacked arrays:
      frames (N,3,3), coeffs (N,16), scale (N,), rms (N,),
      displacement (N,), degenerate (N,) bool.
    Degenerate rows (rank < 2 covariance) carry placeholder values and must
    be handled by the caller.
    """
    pts = cloud.points
    n = len(pts)
    nbr_idx, nbr_d = index.knn_many(pts, k)
    offsets = pts[nbr_idx] - pts[:, None, :]          # (N, k, 3)
    scale = nbr_d[:, -1].copy()
    degenerate = scale <= 0
    scale[degenerate] = 1.0

    cov = np.einsum("nki,nkj->nij", offsets, offsets) / k
    frames, evals = frames_from_covariance(cov)
    degenerate |= evals[:, 1] <= np.maximum(evals[:, 0] * _RANK_EPS, 1e-300)

    local = np.einsum("nkc,ncj->nkj", offsets, frames) / scale[:, None, None]
    U, V, W = local[..., 0], local[..., 1], local[..., 2]
    coeffs, rms = _solve_bicubic(U, V, W, ridge)
    disp = np.mean(W * W, axis=-1)
    return {
        "frames": frames,
        "coeffs": coeffs,
        "scale": scale,
        "rms": rms,
        "displacement": disp,
        "degenerate": degenerate,
    }
