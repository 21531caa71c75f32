"""Command-line driver: upsample, eval, and bench subcommands.

Report paths double as a base name: `--report out/report.json` also writes
`out/report.txt` and `out/report.png`. The bench summary is tab-separated
with a fixed column order plus a noise-trend figure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import ConfigError, IoError, ParseError, SurfupError, UnsupportedFormat
from .io_formats import read_cloud, read_mesh, write_cloud, write_mesh
from .metrics import DEFAULT_UNIFORMITY_RADII, evaluate
from .plots import save_bench_figure, save_eval_figure
from .synthetic import SHAPES, sample_shape, shape_mesh
from .upsampler import OffsetPattern, UpsampleConfig, run_pipeline

EXIT_PARSE = 1
EXIT_CONFIG = 2


def _fail(code: int, exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _parse_num_list(text: str, cast):
    try:
        return tuple(cast(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}")


def _manifest(cfg: UpsampleConfig, input_path, output_path, stages) -> dict:
    return {
        "tool_version": __version__,
        "input": str(input_path),
        "output": str(output_path),
        "config": cfg.to_dict(),
        "stages": [
            {
                "ratio": int(m),
                "wall_time_s": round(st.wall_time_s, 6),
                "mean_displacement_loss": st.mean_displacement_loss,
                "mean_rms_residual": st.mean_rms_residual,
            }
            for m, st in zip(cfg.ratios, stages)
        ],
    }


@click.group()
@click.version_option(__version__)
def main():
    """Point-cloud upsampling via local bicubic surface patches."""


@main.command("upsample")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--ratios", default="1,4", show_default=True,
              help="comma-separated per-stage upscale ratios")
@click.option("--k", default=16, show_default=True, help="neighborhood size")
@click.option("--pattern", type=click.Choice(["ring", "halton"]), default="ring",
              show_default=True)
@click.option("--offset-radius", default=0.5, show_default=True)
@click.option("--noise", default=0.0, show_default=True,
              help="input Gaussian noise as a fraction of the bbox diagonal")
@click.option("--seed", default=0, show_default=True)
@click.option("--no-pin-origin", is_flag=True,
              help="keep the fitted constant term instead of forcing patches "
                   "through their parents")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
def cmd_upsample(input_path, output_path, ratios, k, pattern, offset_radius,
                 noise, seed, no_pin_origin, manifest_path):
    """Upsample a point cloud and write it with a run manifest."""
    try:
        cfg = UpsampleConfig(
            ratios=_parse_num_list(ratios, int),
            k=k,
            pattern=OffsetPattern(pattern),
            offset_radius=offset_radius,
            noise_level=noise,
            rng_seed=seed,
            pin_origin=not no_pin_origin,
        ).validate()
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, exc)
    try:
        cloud = read_cloud(input_path)
    except (ParseError, UnsupportedFormat, IoError) as exc:
        _fail(EXIT_PARSE, exc)
    try:
        out, stages = run_pipeline(cloud, cfg)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, exc)
    try:
        write_cloud(out, output_path)
        if manifest_path:
            Path(manifest_path).write_text(
                json.dumps(_manifest(cfg, input_path, output_path, stages),
                           indent=2, sort_keys=True) + "\n")
    except (IoError, OSError) as exc:
        _fail(EXIT_PARSE, exc)
    click.echo(f"wrote {len(out)} points to {output_path}")


def _write_report(report, pred, base_path: Path):
    base = base_path.with_suffix("") if base_path.suffix else base_path
    base.parent.mkdir(parents=True, exist_ok=True)
    (base.with_suffix(".json")).write_text(report.to_json() + "\n")
    (base.with_suffix(".txt")).write_text(report.to_text())
    save_eval_figure(report, pred.points, base.with_suffix(".png"))
    return base


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path())
@click.option("--gt", "gt_path", required=True, type=click.Path())
@click.option("--mesh", "mesh_path", type=click.Path(), default=None)
@click.option("--uniformity-radii", default="0.004,0.006,0.008,0.010",
              show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def cmd_eval(pred_path, gt_path, mesh_path, uniformity_radii, report_path):
    """Evaluate a predicted cloud against ground truth (and optionally a mesh)."""
    try:
        radii = _parse_num_list(uniformity_radii, float)
        if not radii or any(r <= 0 for r in radii):
            raise ConfigError(f"bad uniformity radii {uniformity_radii!r}")
    except ConfigError as exc:
        _fail(EXIT_CONFIG, exc)
    try:
        pred = read_cloud(pred_path)
        gt = read_cloud(gt_path)
        mesh = read_mesh(mesh_path) if mesh_path else None
    except (ParseError, UnsupportedFormat, IoError) as exc:
        _fail(EXIT_PARSE, exc)
    report = evaluate(pred, gt, mesh, radius_fractions=radii)
    if len(pred) != len(gt):
        click.echo(f"note: EMD skipped, sizes differ ({len(pred)} vs {len(gt)})",
                   err=True)
    base = _write_report(report, pred, Path(report_path))
    click.echo(report.to_text(), nl=False)
    click.echo(f"report written to {base}.json / .txt / .png")


@main.command("bench")
@click.option("--shapes", default="plane,sphere", show_default=True,
              help=f"comma-separated subset of {','.join(SHAPES)}")
@click.option("--n", default=2048, show_default=True, help="input point count")
@click.option("--ratio", default="1,4", show_default=True,
              help="per-stage upscale ratios of the pipeline")
@click.option("--noise", default="0,0.005,0.01,0.015", show_default=True,
              help="comma-separated noise sweep")
@click.option("--k", default=16, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_bench(shapes, n, ratio, noise, k, seed, out_dir):
    """Generate analytic-surface inputs, upsample, evaluate, and summarize."""
    try:
        shape_list = tuple(s.strip() for s in shapes.split(",") if s.strip())
        for s in shape_list:
            if s not in SHAPES:
                raise ConfigError(f"unknown shape {s!r}; options: {','.join(SHAPES)}")
        ratios = _parse_num_list(ratio, int)
        noise_levels = _parse_num_list(noise, float)
        cfg0 = UpsampleConfig(ratios=ratios, k=k, rng_seed=seed).validate()
        if n < k:
            raise ConfigError(f"n={n} smaller than k={k}")
    except ConfigError as exc:
        _fail(EXIT_CONFIG, exc)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    factor = int(np.prod(ratios))
    radii = DEFAULT_UNIFORMITY_RADII
    rows = []
    for shape in shape_list:
        cloud = sample_shape(shape, n, seed=seed)
        gt = sample_shape(shape, n * factor, seed=seed + 1)
        mesh = shape_mesh(shape)
        gt_path = out / f"{shape}_gt.xyz"
        mesh_path = out / f"{shape}_mesh.off"
        write_cloud(gt, gt_path)
        write_mesh(mesh, mesh_path)
        for level in noise_levels:
            tag = f"{shape}_n{n}_noise{level:g}"
            cfg = UpsampleConfig(ratios=ratios, k=k, rng_seed=seed,
                                 noise_level=level)
            pred, stages = run_pipeline(cloud, cfg)
            write_cloud(cloud, out / f"{tag}_input.xyz")
            write_cloud(pred, out / f"{tag}_pred.ply")
            report = evaluate(pred, gt, mesh, radius_fractions=radii)
            mean_disp = float(np.mean([st.mean_displacement_loss for st in stages]))
            cell = report.to_flat_dict()
            cell["combined_loss"] = report.cd_l2 + cfg.loss_weight * mean_disp
            (out / f"{tag}_report.json").write_text(
                json.dumps(cell, indent=2, sort_keys=True) + "\n")
            rows.append({"shape": shape, "n": n, "ratio": ratio, "noise": level,
                         **report.to_flat_dict()})
            click.echo(f"{tag}: cd_l2={report.cd_l2:.4e} "
                       f"p2f_mean={report.p2f_mean:.4e}")

    cols = (["shape", "n", "ratio", "noise", "cd_l2", "cd_l1", "emd",
             "p2f_mean", "p2f_max"] + [f"uniformity.{r:g}" for r in radii])
    lines = ["\t".join(cols)]
    for row in rows:
        lines.append("\t".join(
            f"{row[c]:.9g}" if isinstance(row.get(c), float) else str(row.get(c, ""))
            for c in cols))
    (out / "summary.tsv").write_text("\n".join(lines) + "\n")
    save_bench_figure(rows, out / "summary_cd_vs_noise.png")
    click.echo(f"summary written to {out / 'summary.tsv'}")


if __name__ == "__main__":
    main()
