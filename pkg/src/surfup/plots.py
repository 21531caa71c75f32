"""Matplotlib figure rendering for evaluation reports and benchmark sweeps.

Figures are written next to the delimited/JSON outputs; rendering always
uses the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_eval_figure(report, pred_points, path):
    """Two panels: XY scatter of the prediction and uniformity bars."""
    fig, (ax_pts, ax_uni) = plt.subplots(1, 2, figsize=(9, 4))
    ax_pts.scatter(pred_points[:, 0], pred_points[:, 1], s=1.5, c=pred_points[:, 2],
                   cmap="viridis", linewidths=0)
    ax_pts.set_aspect("equal")
    ax_pts.set_title(f"prediction ({len(pred_points)} pts, XY view)")
    ax_pts.set_xlabel("x")
    ax_pts.set_ylabel("y")

    if report.uniformity:
        fracs = sorted(report.uniformity)
        vals = [report.uniformity[f] for f in fracs]
        ax_uni.bar([f"{100 * f:g}%" for f in fracs], vals, color="#4878d0")
        ax_uni.set_ylabel("uniformity score")
        ax_uni.set_xlabel("disk area fraction")
    lines = [f"CD-L2 {report.cd_l2:.3e}", f"CD-L1 {report.cd_l1:.3e}"]
    if report.emd is not None:
        lines.append(f"EMD {report.emd:.3e}")
    if report.p2f_mean is not None:
        lines.append(f"P2F {report.p2f_mean:.3e}")
    ax_uni.set_title("  ".join(lines), fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_bench_figure(rows, path):
    """cd_l2 versus noise level, one line per shape."""
    fig, ax = plt.subplots(figsize=(6, 4))
    shapes = sorted({r["shape"] for r in rows})
    for shape in shapes:
        pts = sorted((r["noise"], r["cd_l2"]) for r in rows if r["shape"] == shape)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=shape)
    ax.set_xlabel("noise level (fraction of bbox diagonal)")
    ax.set_ylabel("Chamfer distance (squared-L2)")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
