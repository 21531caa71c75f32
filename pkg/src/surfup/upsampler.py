"""Child-point generation on fitted patches and the stacked multi-stage
upsampling pipeline, plus the Gaussian perturbation used for robustness
sweeps.

Each stage fits a local bicubic patch per parent, places m plane offsets
(du, dv) per parent, and lifts them onto the patch; every child therefore
lies exactly on its parent's fitted surface. Degenerate parents (no usable
projection plane) contribute m copies of themselves so the output count
contract |out| = m * |in| always holds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geom_core import LocalPatch, PointCloud, bicubic_embed
from .patch_fit import FitReport, RIDGE_DEFAULT, fit_patches_arrays
from .spatial_index import build_index


class OffsetPattern(enum.Enum):
    RING_GRID = "ring"
    HALTON = "halton"


@dataclass(frozen=True)
class UpsampleConfig:
    """Pipeline configuration; one upsampling stage runs per ratio entry."""

    ratios: tuple = (1, 4)
    k: int = 16
    pattern: OffsetPattern = OffsetPattern.RING_GRID
    offset_radius: float = 0.5      # fraction of the neighborhood scale
    noise_level: float = 0.0        # sigma as a fraction of the bbox diagonal
    rng_seed: int = 0
    loss_weight: float = 0.01       # weight of the displacement term in combined loss
    pin_origin: bool = True         # force phi(0,0)=0 so each patch passes through its parent
    ridge: float = RIDGE_DEFAULT

    def validate(self):
        if not self.ratios or any(int(r) != r or r < 1 for r in self.ratios):
            raise ConfigError(f"ratios must be positive integers, got {self.ratios}")
        if self.k < 3:
            raise ConfigError(f"k must be >= 3, got {self.k}")
        if not 0 < self.offset_radius <= 1:
            raise ConfigError(f"offset_radius must be in (0, 1], got {self.offset_radius}")
        if self.noise_level < 0:
            raise ConfigError(f"noise_level must be >= 0, got {self.noise_level}")
        if not isinstance(self.pattern, OffsetPattern):
            raise ConfigError(f"unknown offset pattern {self.pattern!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "ratios": [int(r) for r in self.ratios],
            "k": self.k,
            "pattern": self.pattern.value,
            "offset_radius": self.offset_radius,
            "noise_level": self.noise_level,
            "rng_seed": self.rng_seed,
            "loss_weight": self.loss_weight,
            "pin_origin": self.pin_origin,
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UpsampleConfig":
        d = dict(d)
        if "ratios" in d:
            d["ratios"] = tuple(d["ratios"])
        if "pattern" in d:
            d["pattern"] = OffsetPattern(d["pattern"])
        return cls(**d)


@dataclass
class StageOutput:
    """Result of one upsampling stage over N parents at ratio m."""

    cloud: PointCloud
    patches: list                    # per-parent FitReport, None for degenerate parents
    mean_displacement_loss: float
    mean_rms_residual: float
    wall_time_s: float = field(default=0.0)


def _radical_inverse(indices, base: int) -> np.ndarray:
    """Van der Corput radical inverse of integer indices in the given base."""
    idx = np.asarray(indices, dtype=np.int64).copy()
    out = np.zeros(idx.shape, dtype=np.float64)
    f = 1.0 / base
    while np.any(idx > 0):
        out += f * (idx % base)
        idx //= base
        f /= base
    return out


def _ring_offsets(m: int, radius: float) -> np.ndarray:
    """(0,0) plus m-1 points on concentric rings, counts as even as possible.

    Each ring starts at angle 90 degrees; the outermost ring sits at the
    full radius. Deterministic.
    """
    out = np.zeros((m, 2))
    rest = m - 1
    if rest == 0:
        return out
    n_rings = int(np.ceil(np.sqrt(rest / 3.0)))
    base, extra = divmod(rest, n_rings)
    pos = 1
    for j in range(1, n_rings + 1):
        # outer rings absorb the remainder (they have more circumference)
        count = base + (1 if j > n_rings - extra else 0)
        r = radius * j / n_rings
        ang = np.pi / 2 + 2 * np.pi * np.arange(count) / count
        out[pos:pos + count, 0] = r * np.cos(ang)
        out[pos:pos + count, 1] = r * np.sin(ang)
        pos += count
    return out


def _halton_offsets(m: int, radius: float, parent_index: int, seed: int) -> np.ndarray:
    """Low-discrepancy disk offsets, stream-offset by (parent_index, seed)."""
    start = 1 + (seed % (1 << 20)) * 4099 + parent_index * m
    idx = np.arange(start, start + m)
    h1 = _radical_inverse(idx, 2)
    h2 = _radical_inverse(idx, 3)
    r = radius * np.sqrt(h1)
    ang = 2 * np.pi * h2
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)


def child_offsets(m: int, pattern: OffsetPattern, radius: float,
                  parent_index: int = 0, seed: int = 0) -> np.ndarray:
    """m plane offsets (du, dv) for one parent; m=1 is always [(0, 0)]."""
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    if m == 1:
        return np.zeros((1, 2))
    if pattern is OffsetPattern.RING_GRID:
        return _ring_offsets(m, radius)
    if pattern is OffsetPattern.HALTON:
        return _halton_offsets(m, radius, parent_index, seed)
    raise ConfigError(f"unknown offset pattern {pattern!r}")


def add_noise(cloud: PointCloud, level: float, seed: int) -> PointCloud:
    """Perturb each coordinate with N(0, (level * bbox_diagonal)^2) noise."""
    if level < 0:
        raise ConfigError("noise level must be >= 0")
    if level == 0:
        return cloud
    sigma = level * cloud.bbox_diagonal
    rng = np.random.default_rng(seed)
    return PointCloud(cloud.points + rng.normal(0.0, sigma, cloud.points.shape))


def upsample_stage(cloud: PointCloud, m: int, cfg: UpsampleConfig) -> StageOutput:
    """One stage: fit every parent's patch and lift m children onto it."""
    cfg.validate()
    pts = cloud.points
    n = len(pts)
    index = build_index(cloud)
    fits = fit_patches_arrays(cloud, index, cfg.k, cfg.ridge)
    frames = fits["frames"]
    coeffs = fits["coeffs"]
    scale = fits["scale"]
    degenerate = fits["degenerate"]
    if cfg.pin_origin:
        coeffs = coeffs.copy()
        coeffs[:, 0] = 0.0

    if cfg.pattern is OffsetPattern.RING_GRID:
        duv = np.broadcast_to(_ring_offsets(m, cfg.offset_radius) if m > 1
                              else np.zeros((1, 2)), (n, m, 2))
    else:
        duv = np.stack([child_offsets(m, cfg.pattern, cfg.offset_radius,
                                      i, cfg.rng_seed) for i in range(n)])

    emb = bicubic_embed(duv[..., 0], duv[..., 1])          # (n, m, 16)
    w = np.einsum("nme,ne->nm", emb, coeffs)
    local = np.stack([duv[..., 0], duv[..., 1], w], axis=-1) * scale[:, None, None]
    children = pts[:, None, :] + np.einsum("ncj,nmj->nmc", frames, local)
    if degenerate.any():
        children[degenerate] = pts[degenerate, None, :]

    reports = []
    for i in range(n):
        if degenerate[i]:
            reports.append(None)
        else:
            patch = LocalPatch(origin=pts[i], rot=frames[i],
                               coeffs=coeffs[i], scale=float(scale[i]))
            reports.append(FitReport(patch=patch,
                                     rms_residual=float(fits["rms"][i]),
                                     displacement_loss=float(fits["displacement"][i])))
    ok = ~degenerate
    mean_disp = float(fits["displacement"][ok].mean()) if ok.any() else 0.0
    mean_rms = float(fits["rms"][ok].mean()) if ok.any() else 0.0
    return StageOutput(cloud=PointCloud(children.reshape(n * m, 3)),
                       patches=reports,
                       mean_displacement_loss=mean_disp,
                       mean_rms_residual=mean_rms)


def run_pipeline(cloud: PointCloud, cfg: UpsampleConfig):
    """Apply input noise, then one stage per ratio. Returns (cloud, stages)."""
    import time

    cfg.validate()
    if len(cloud) < cfg.k:
        raise ConfigError(f"cloud has {len(cloud)} points but k={cfg.k}")
    current = add_noise(cloud, cfg.noise_level, cfg.rng_seed)
    stages = []
    for m in cfg.ratios:
        t0 = time.perf_counter()
        stage = upsample_stage(current, int(m), cfg)
        stage.wall_time_s = time.perf_counter() - t0
        stages.append(stage)
        current = stage.cloud
    return current, stages


def upsample(cloud: PointCloud, cfg: UpsampleConfig) -> PointCloud:
    """Full pipeline; output size is len(cloud) * product(ratios)."""
    out, _ = run_pipeline(cloud, cfg)
    return out


__all__ = [
    "OffsetPattern", "UpsampleConfig", "StageOutput",
    "child_offsets", "add_noise", "upsample_stage", "run_pipeline", "upsample",
]
