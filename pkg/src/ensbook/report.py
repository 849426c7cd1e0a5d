"""Report rendering: delimited rows plus matplotlib figures on disk."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import QualityReport
from .profiler import ProfileEstimate


def _fmt_block(dims) -> str:
    return "x".join(str(d) for d in dims)


def profile_table(estimates: list[ProfileEstimate]) -> str:
    lines = [f"{'block':<10} {'dec':>4} {'reduction':<16} {'S_cb':>12} {'M_vis':>10} {'dedup':>7}"]
    for e in estimates:
        lines.append(
            f"{_fmt_block(e.block_dims):<10} {e.decimals:>4} {e.reduction.label:<16} "
            f"{e.s_cb / 2**20:>10.2f}MB {e.m_vis:>8.1f}MB {e.dedup_ratio:>7.3f}"
        )
    return "\n".join(lines)


def write_profile_report(estimates: list[ProfileEstimate], out_dir) -> dict[str, Path]:
    """Write profile.csv and a codebook-size figure; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "profile.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["block", "decimals", "reduction", "s_cb_bytes", "m_vis_mb", "dedup_ratio"]
        )
        for e in estimates:
            writer.writerow(
                [
                    _fmt_block(e.block_dims),
                    e.decimals,
                    e.reduction.label,
                    f"{e.s_cb:.0f}",
                    f"{e.m_vis:.3f}",
                    f"{e.dedup_ratio:.6f}",
                ]
            )

    fig, ax = plt.subplots(figsize=(7, 4.5))
    series: dict[tuple, list[tuple[int, float]]] = {}
    for e in estimates:
        series.setdefault((e.block_dims, e.reduction.label), []).append(
            (e.decimals, e.s_cb / 2**20)
        )
    for (dims, label), points in sorted(series.items()):
        points.sort()
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            marker="o",
            label=f"{_fmt_block(dims)} {label}",
        )
    ax.set_xlabel("decimal places")
    ax.set_ylabel("estimated codebook size (MB)")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    png_path = out_dir / "profile_size.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "figure": png_path}


def quality_table(report: QualityReport) -> str:
    lines = [f"{'run':>4} {'t':>4} {'psnr_db':>10} {'max_err':>12} {'mse':>12}"]
    for v in report.volumes:
        lines.append(
            f"{v.run:>4} {v.timestep:>4} {v.psnr_db:>10.3f} {v.max_abs_error:>12.6g} {v.mse:>12.6g}"
        )
    lines.append(
        f"compression {report.compression_ratio:.2f}x  "
        f"dedup {report.dedup_ratio:.4f}  "
        f"codebook {report.codebook_bytes} B"
    )
    return "\n".join(lines)


def write_quality_report(report: QualityReport, out_dir, label: str = "") -> dict[str, Path]:
    """Write quality.csv and a per-volume PSNR figure; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "quality.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "timestep", "psnr_db", "max_abs_error", "mse"])
        for v in report.volumes:
            writer.writerow([v.run, v.timestep, v.psnr_db, v.max_abs_error, v.mse])

    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(report.volumes))
    finite = [min(v.psnr_db, 200.0) for v in report.volumes]
    ax.bar(xs, finite, color="#3b7dd8")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"{v.run},{v.timestep}" for v in report.volumes], rotation=90, fontsize=6)
    ax.set_xlabel("volume (run, timestep)")
    ax.set_ylabel("PSNR (dB, capped at 200)")
    title = f"reconstruction quality {label}".strip()
    ax.set_title(f"{title} - {report.compression_ratio:.2f}x compression")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    png_path = out_dir / "quality_psnr.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "figure": png_path}
