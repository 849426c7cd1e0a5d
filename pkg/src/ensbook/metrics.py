"""Fidelity and size metrics: PSNR, per-voxel error, compression ratios."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .codebook import CodebookReader
from .model import EnsembleCoordinate, EnsembleManifest, read_volume
from .runtime import WorkingSet


def psnr(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    """20 log10(peak) - 10 log10(MSE); +inf when the volumes are identical."""
    if a.shape != b.shape:
        raise ValueError(f"volume shapes differ: {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(peak) - 10.0 * math.log10(mse)


@dataclass
class VolumeQuality:
    run: int
    timestep: int
    psnr_db: float
    max_abs_error: float
    mse: float


@dataclass
class QualityReport:
    volumes: list[VolumeQuality]
    compression_ratio: float   # original bytes / codebook bytes
    dedup_ratio: float         # B_rem / B_tot
    codebook_bytes: int
    original_bytes: int

    @property
    def psnr_min(self) -> float:
        return min(v.psnr_db for v in self.volumes)

    @property
    def psnr_mean(self) -> float:
        finite = [v.psnr_db for v in self.volumes if math.isfinite(v.psnr_db)]
        return float(np.mean(finite)) if finite else math.inf

    @property
    def max_abs_error(self) -> float:
        return max(v.max_abs_error for v in self.volumes)


def sample_coordinates(shape, count: int | None) -> list[tuple[int, int]]:
    """Evenly spaced (run, timestep) sample over scan order; None = all."""
    all_coords = [(r, t) for r in range(shape.runs) for t in range(shape.timesteps)]
    if count is None or count >= len(all_coords):
        return all_coords
    idx = np.linspace(0, len(all_coords) - 1, max(count, 1)).round().astype(int)
    return [all_coords[i] for i in sorted(set(int(i) for i in idx))]


def compare_codebook(
    manifest: EnsembleManifest,
    reader: CodebookReader,
    coords: list[tuple[int, int]] | None = None,
    sample: int | None = None,
) -> QualityReport:
    """Reconstruct sampled volumes through the streaming runtime and compare
    them voxel-for-voxel against the originals."""
    if coords is None:
        coords = sample_coordinates(manifest.shape, sample)
    ws = WorkingSet(reader)
    peak = manifest.shape.value_peak
    rows = []
    for r, t in coords:
        original = read_volume(manifest, EnsembleCoordinate(r, t))
        rebuilt, _ = ws.switch_to(r, t)
        diff = np.asarray(rebuilt, np.float64) - np.asarray(original, np.float64)
        rows.append(
            VolumeQuality(
                run=r,
                timestep=t,
                psnr_db=psnr(original, rebuilt, peak),
                max_abs_error=float(np.abs(diff).max()),
                mse=float(np.mean(diff**2)),
            )
        )
    codebook_bytes = os.path.getsize(reader.path)
    original_bytes = manifest.shape.original_bytes
    return QualityReport(
        volumes=rows,
        compression_ratio=original_bytes / codebook_bytes,
        dedup_ratio=reader.header.b_rem / reader.header.b_tot,
        codebook_bytes=codebook_bytes,
        original_bytes=original_bytes,
    )
