"""Acceptance suite: one test per release criterion, each printing PASS/FAIL.

Every test prints a single `[criterion N] PASS|FAIL <summary>` line so the
full gate can be read off a `pytest -v -s tests/test_acceptance.py` run.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from surfup import (
    CloudFormat, PointCloud, UpsampleConfig, add_noise, bicubic_embed,
    chamfer_l1, chamfer_l2, decode_rotation_many, emd, evaluate,
    farthest_point_sample, fit_bicubic, p2f, pca_frame, read_cloud,
    uniformity, upsample, write_cloud,
)
from surfup.metrics import point_mesh_distances
from surfup.patch_fit import Neighborhood
import surfup.synthetic as synthetic

from oracles import (
    brute_chamfer_l1, brute_chamfer_l2, brute_p2f, emd_enumerate,
)

DATA = Path(__file__).parent / "data"


def report(criterion: int, ok: bool, summary: str):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'} {summary}")
    assert ok, f"criterion {criterion}: {summary}"


def test_criterion_1_rotation_decode():
    """10^6 random 6D decodes: orthogonality, det, scale invariance, <10 s."""
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst_orth = worst_det = worst_scale = 0.0
    for _ in range(10):
        six = rng.normal(size=(100_000, 6))
        R = decode_rotation_many(six)
        eye = np.eye(3)
        gram = np.einsum("nij,nik->njk", R, R)
        worst_orth = max(worst_orth,
                         np.sqrt(((gram - eye) ** 2).sum(axis=(1, 2))).max())
        worst_det = max(worst_det, np.abs(np.linalg.det(R) - 1.0).max())
        scales = rng.uniform(0.1, 10.0, size=(six.shape[0], 1))
        scaled = six.copy()
        scaled[:, :3] *= scales
        scaled[:, 3:] *= rng.uniform(0.1, 10.0, size=(six.shape[0], 1))
        worst_scale = max(worst_scale,
                          np.abs(decode_rotation_many(scaled) - R).max())
    elapsed = time.perf_counter() - t0
    ok = worst_orth <= 1e-12 and worst_det <= 1e-12 and \
        worst_scale <= 1e-12 and elapsed < 10.0
    report(1, ok, f"orth={worst_orth:.2e} det={worst_det:.2e} "
                  f"scale={worst_scale:.2e} time={elapsed:.2f}s")


def test_criterion_2_planar_exactness():
    """20 rigid placements of a 2048-point plane: x4 children stay on it."""
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    cfg = UpsampleConfig(ratios=(4,), k=16)
    for _ in range(20):
        flat = np.column_stack([rng.uniform(-1, 1, (2048, 2)), np.zeros(2048)])
        R = decode_rotation_many(rng.normal(size=(1, 6)))[0]
        t = rng.uniform(-5, 5, 3)
        out = upsample(PointCloud(flat @ R.T + t), cfg)
        normal = R[:, 2]
        dist = np.abs((out.points - t) @ normal)
        worst = max(worst, dist.max())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30.0
    report(2, ok, f"max plane distance={worst:.2e} time={elapsed:.2f}s")


def test_criterion_3_quadratic_representability():
    """Quadratic height fields with k=25 recover coefficients exactly."""
    rng = np.random.default_rng(2)
    grid = np.linspace(-0.5, 0.5, 5)
    uu, vv = np.meshgrid(grid, grid)
    u, v = uu.ravel(), vv.ravel()
    worst_coeff = worst_res = 0.0
    for _ in range(50):
        alpha, beta, gamma = rng.uniform(-1, 1, 3)
        w = alpha * u ** 2 + beta * u * v + gamma * v ** 2
        nbh = Neighborhood(np.zeros(3), np.column_stack([u, v, w]), 1.0)
        coeffs, rms = fit_bicubic(nbh, np.eye(3))
        expected = np.zeros(16)
        expected[2] = alpha   # u^2
        expected[5] = beta    # u v
        expected[8] = gamma   # v^2
        worst_coeff = max(worst_coeff, np.abs(coeffs - expected).max())
        worst_res = max(worst_res, rms)
    ok = worst_coeff <= 1e-6 and worst_res <= 1e-9
    report(3, ok, f"coeff err={worst_coeff:.2e} residual={worst_res:.2e}")


def test_criterion_4_frame_optimality():
    """PCA frame height variance beats 100 random directions per neighborhood."""
    rng = np.random.default_rng(3)
    worst_margin = -np.inf
    for _ in range(1000):
        k = int(rng.integers(8, 33))
        u, v = rng.uniform(-1, 1, (2, k))
        a, b, c = rng.uniform(-1, 1, 3)
        w = a * u ** 2 + b * u * v + c * v ** 2 + 0.05 * rng.normal(size=k)
        offsets = np.column_stack([u, v, w])
        R = decode_rotation_many(rng.normal(size=(1, 6)))[0]
        offsets = offsets @ R.T
        frame = pca_frame(Neighborhood(np.zeros(3), offsets, 1.0))
        var_pca = np.mean((offsets @ frame[:, 2]) ** 2)
        dirs = rng.normal(size=(100, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        var_rand = np.mean((offsets @ dirs.T) ** 2, axis=0)
        worst_margin = max(worst_margin, float((var_pca - var_rand).max()))
    ok = worst_margin <= 1e-12
    report(4, ok, f"max (pca_var - random_var)={worst_margin:.2e}")


def test_criterion_5_sphere_benchmark():
    """Mean radial error on the frozen sphere benchmark, within 10% of oracle."""
    frozen = json.loads((DATA / "tau_sphere.json").read_text())
    tau = frozen["tau_sphere"]
    cloud = synthetic.sample_shape("sphere", frozen["n"],
                                   seed=frozen["sampling_seed"])
    cfg = UpsampleConfig(ratios=(frozen["ratio"],), k=frozen["k"],
                         offset_radius=frozen["offset_radius"])
    out = upsample(cloud, cfg)
    err = np.abs(np.linalg.norm(out.points, axis=1) - 1.0).mean()
    rel = abs(err - tau) / tau
    ok = rel <= 0.10 and err <= 5e-3
    report(5, ok, f"mean radial error={err:.6e} oracle={tau:.6e} "
                  f"rel diff={rel:.2%}")


def test_criterion_6_noise_trend():
    """cd_l2 against clean dense ground truth increases strictly with noise."""
    t0 = time.perf_counter()
    cloud = synthetic.sample_shape("sphere", 2048, seed=5)
    gt = synthetic.sample_shape("sphere", 8192, seed=6)
    cds = []
    for level in (0.0, 0.005, 0.01, 0.015):
        cfg = UpsampleConfig(ratios=(4,), k=16, noise_level=level, rng_seed=1)
        pred = upsample(cloud, cfg)
        cds.append(chamfer_l2(pred, gt))
    elapsed = time.perf_counter() - t0
    increasing = all(b > a for a, b in zip(cds, cds[1:]))
    ok = increasing and elapsed < 120.0
    report(6, ok, "cd_l2 sweep = [" + ", ".join(f"{c:.3e}" for c in cds) +
                  f"] time={elapsed:.1f}s")


def test_criterion_7_metric_oracles():
    """Accelerated metrics equal brute force; EMD equals enumeration; axioms."""
    rng = np.random.default_rng(7)

    worst = 0.0
    for n, m in [(512, 512), (64, 512), (512, 64)]:
        p, q = rng.normal(size=(n, 3)), rng.normal(size=(m, 3))
        pc, qc = PointCloud(p), PointCloud(q)
        worst = max(worst, abs(chamfer_l2(pc, qc) - brute_chamfer_l2(p, q)))
        worst = max(worst, abs(chamfer_l1(pc, qc) - brute_chamfer_l1(p, q)))
    for resolution in (12, 32):  # brute-force path and culled path
        mesh = synthetic.shape_mesh("sphere", resolution=resolution)
        pts = rng.normal(size=(256, 3))
        got = point_mesh_distances(pts, mesh)
        ref = brute_p2f(pts, mesh.vertices, mesh.faces)
        worst = max(worst, np.abs(got - ref).max())

    worst_emd = 0.0
    for n in range(2, 9):
        p, q = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
        got = emd(PointCloud(p), PointCloud(q))
        worst_emd = max(worst_emd, abs(got - emd_enumerate(p, q)))

    worst_axiom = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        m = int(rng.integers(2, 40))
        p, q = rng.normal(size=(n, 3)), rng.normal(size=(m, 3))
        pc, qc = PointCloud(p), PointCloud(q)
        d2, d1 = chamfer_l2(pc, qc), chamfer_l1(pc, qc)
        worst_axiom = max(worst_axiom,
                          abs(d2 - chamfer_l2(qc, pc)),
                          abs(d1 - chamfer_l1(qc, pc)),
                          -min(d1, d2, 0.0),
                          chamfer_l2(pc, pc), chamfer_l1(pc, pc),
                          chamfer_l2(pc, PointCloud(p[rng.permutation(n)])))
    ok = worst <= 1e-12 and worst_emd <= 1e-9 and worst_axiom <= 1e-12
    report(7, ok, f"brute-force gap={worst:.2e} emd gap={worst_emd:.2e} "
                  f"axiom violation={worst_axiom:.2e}")


def test_criterion_8_count_and_determinism(tmp_path):
    """Output counts match N * prod(ratios); reruns are bit-identical on disk."""
    rng = np.random.default_rng(8)
    count_ok = True
    for _ in range(50):
        n = int(rng.integers(32, 600))
        n_stages = int(rng.integers(1, 4))
        ratios = tuple(int(r) for r in rng.integers(1, 5, n_stages))
        k = min(16, n)
        cloud = PointCloud(rng.normal(size=(n, 3)))
        out = upsample(cloud, UpsampleConfig(ratios=ratios, k=k))
        count_ok &= len(out) == n * int(np.prod(ratios))

    cloud = synthetic.sample_shape("torus", 500, seed=2)
    cfg = UpsampleConfig(ratios=(1, 4), noise_level=0.01, rng_seed=9)
    paths = []
    for tag in ("a", "b"):
        out = upsample(cloud, cfg)
        path = tmp_path / f"{tag}.ply"
        write_cloud(out, path, CloudFormat.PLY_BINARY_LE)
        paths.append(path)
    identical = paths[0].read_bytes() == paths[1].read_bytes()
    ok = count_ok and identical
    report(8, ok, f"counts ok={count_ok} files bit-identical={identical}")


def test_criterion_9_uniformity_discrimination():
    """Blue-noise sphere samples beat half-clustered ones at all four radii."""
    rng = np.random.default_rng(9)
    dense = rng.standard_normal((8192, 3))
    dense /= np.linalg.norm(dense, axis=1, keepdims=True)
    # farthest-point thinning approximates a Poisson-disk (blue noise) sample
    idx = farthest_point_sample(PointCloud(dense), 1024)
    uniform = PointCloud(dense[idx])
    clustered_pts = uniform.points.copy()
    pole = np.array([0.0, 0.0, 1.0])
    clustered_pts[:512] = pole + 0.05 * rng.standard_normal((512, 3))
    clustered_pts[:512] /= np.linalg.norm(clustered_pts[:512], axis=1,
                                          keepdims=True)
    u_scores = uniformity(uniform)
    c_scores = uniformity(PointCloud(clustered_pts))
    gaps = {frac: c_scores[frac] - u_scores[frac] for frac in u_scores}
    ok = len(gaps) == 4 and all(g > 0 for g in gaps.values())
    report(9, ok, "clustered - uniform score gaps = " +
                  ", ".join(f"{f:g}:{g:.3g}" for f, g in gaps.items()))
