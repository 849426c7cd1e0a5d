"""Parameter profiling: trial deduplication on sampled ensemble regions.

Processing the full ensemble for every parameter choice is too expensive,
so random non-overlapping regions of 2x2 to 3x3 (runs x timesteps) are
sampled until they cover the requested fraction of the ensemble space.
The final codebook size for a configuration is then estimated as

    S_cb = S_od * (B_rem / B_tot) * R + S_g

where S_od is the original data size, S_g the size of the grid section,
B_rem/B_tot the measured sample dedup ratio, and R the per-block reduction
factor: 1 for "none", 2 * E_PCA / E_tot for PCA, and the measured
encoded/raw byte ratio for wavelet.  Visualization memory is estimated by
the fitted curve M_vis = 115200 / E_tot + 200 (MB).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dedup import BlockSpec, deduplicate, grid_dims
from .model import EnsembleManifest, EnsembleShape
from .reduction import ReductionConfig, encode_wavelet_block

TABLE_BLOCK_SIZES = ((4, 4, 4), (8, 8, 8), (16, 16, 16), (8, 8, 1))
TABLE_DECIMALS = (-1, 0, 1, 2)
TABLE_PCA_FRACTIONS = (2, 4, 8, 16)      # keep n / fraction components
DEFAULT_WAVELET_QUALITIES = (50.0, 75.0, 90.0, 99.0)


@dataclass(frozen=True)
class SampleRegion:
    run_start: int
    timestep_start: int
    runs: int
    timesteps: int

    @property
    def area(self) -> int:
        return self.runs * self.timesteps

    def coordinates(self) -> list[tuple[int, int]]:
        return [
            (r, t)
            for r in range(self.run_start, self.run_start + self.runs)
            for t in range(self.timestep_start, self.timestep_start + self.timesteps)
        ]

    def overlaps(self, other: "SampleRegion") -> bool:
        return not (
            self.run_start + self.runs <= other.run_start
            or other.run_start + other.runs <= self.run_start
            or self.timestep_start + self.timesteps <= other.timestep_start
            or other.timestep_start + other.timesteps <= self.timestep_start
        )


@dataclass(frozen=True)
class ProfileEstimate:
    block_dims: tuple[int, int, int]
    decimals: int
    reduction: ReductionConfig
    s_cb: float
    m_vis: float
    dedup_ratio: float

    def sort_key(self):
        param = self.reduction.components or self.reduction.quality or 0
        return (self.s_cb, self.m_vis, self.block_dims, self.decimals, param)


def sample_regions(
    shape: EnsembleShape, coverage: float = 0.10, seed: int = 0
) -> list[SampleRegion]:
    """Random non-overlapping regions covering >= coverage of the ensemble.

    Sides are uniform in {2, 3} where they fit; sampling stops early when no
    further placement exists.  Deterministic per seed.
    """
    if shape.runs < 2 or shape.timesteps < 2:
        raise ValueError("ensemble must be at least 2x2 to sample regions")
    rng = np.random.default_rng(seed)
    target = coverage * shape.runs * shape.timesteps
    regions: list[SampleRegion] = []
    covered = 0

    def placements() -> list[SampleRegion]:
        out = []
        for sr in (2, 3):
            for st in (2, 3):
                if sr > shape.runs or st > shape.timesteps:
                    continue
                for r0 in range(shape.runs - sr + 1):
                    for t0 in range(shape.timesteps - st + 1):
                        cand = SampleRegion(r0, t0, sr, st)
                        if not any(cand.overlaps(reg) for reg in regions):
                            out.append(cand)
        return out

    while covered < target:
        placed = False
        for _ in range(64):
            sr = int(rng.integers(2, min(3, shape.runs) + 1))
            st = int(rng.integers(2, min(3, shape.timesteps) + 1))
            r0 = int(rng.integers(0, shape.runs - sr + 1))
            t0 = int(rng.integers(0, shape.timesteps - st + 1))
            cand = SampleRegion(r0, t0, sr, st)
            if not any(cand.overlaps(reg) for reg in regions):
                regions.append(cand)
                covered += cand.area
                placed = True
                break
        if not placed:
            remaining = placements()
            if not remaining:
                break
            pick = remaining[int(rng.integers(0, len(remaining)))]
            regions.append(pick)
            covered += pick.area
    return regions


def estimate_vis_memory(elements_per_block: int) -> float:
    """Fitted visualization memory requirement in MB."""
    if elements_per_block < 1:
        raise ValueError("elements_per_block must be >= 1")
    return 115200.0 / elements_per_block + 200.0


def estimate_codebook_size(
    s_od: float,
    b_rem: int,
    b_tot: int,
    s_g: float,
    reduction: ReductionConfig,
    elements_per_block: int,
    wavelet_ratio: float | None = None,
) -> float:
    """Estimated codebook bytes for a configuration."""
    if b_tot <= 0:
        raise ValueError("b_tot must be positive")
    if reduction.kind == "none":
        factor = 1.0
    elif reduction.kind == "pca":
        factor = 2.0 * reduction.components / elements_per_block
    else:
        if wavelet_ratio is None:
            raise ValueError("wavelet estimate needs the measured byte ratio")
        factor = wavelet_ratio
    return s_od * (b_rem / b_tot) * factor + s_g


def default_parameter_grid(reduction_kind: str) -> list[tuple[tuple[int, int, int], int, ReductionConfig]]:
    """Cross-product of block sizes, decimal places, and reduction settings."""
    grid = []
    for dims in TABLE_BLOCK_SIZES:
        n = int(np.prod(dims))
        for d in TABLE_DECIMALS:
            if reduction_kind == "none":
                grid.append((dims, d, ReductionConfig("none")))
            elif reduction_kind == "pca":
                for frac in TABLE_PCA_FRACTIONS:
                    grid.append((dims, d, ReductionConfig("pca", components=n // frac)))
            else:
                for q in DEFAULT_WAVELET_QUALITIES:
                    grid.append((dims, d, ReductionConfig("wavelet", quality=q)))
    return grid


def profile(
    manifest: EnsembleManifest,
    parameter_grid=None,
    coverage: float = 0.10,
    seed: int = 0,
    n_best: int = 3,
    reduction_kind: str = "pca",
) -> list[ProfileEstimate]:
    """Rank parameter configurations by estimated codebook size, ascending.

    Ties break on smaller M_vis, then lexicographic parameters.  Returns the
    best ``n_best`` estimates; pass ``n_best=None`` for all of them.
    """
    if parameter_grid is None:
        parameter_grid = default_parameter_grid(reduction_kind)
    shape = manifest.shape
    regions = sample_regions(shape, coverage=coverage, seed=seed)
    coords = sorted({c for reg in regions for c in reg.coordinates()})
    s_od = float(shape.original_bytes)

    estimates: list[ProfileEstimate] = []
    by_geometry: dict[tuple, tuple] = {}
    for block_dims, decimals, config in parameter_grid:
        key = (block_dims, decimals)
        if key not in by_geometry:
            spec = BlockSpec(block_dims, decimals)
            trial = deduplicate(manifest, spec, coords=coords)
            by_geometry[key] = (trial.b_rem, trial.b_tot, trial.representatives)
        b_rem, b_tot, reps = by_geometry[key]
        n = int(np.prod(block_dims))
        gd = grid_dims(shape.dims, block_dims)
        s_g = 4.0 * int(np.prod(gd)) * shape.volume_count

        wavelet_ratio = None
        if config.kind == "wavelet":
            encoded = sum(
                len(encode_wavelet_block(row, block_dims, config.quality)) for row in reps
            )
            wavelet_ratio = encoded / (4.0 * n * max(len(reps), 1))
        s_cb = estimate_codebook_size(
            s_od, b_rem, b_tot, s_g, config, n, wavelet_ratio=wavelet_ratio
        )
        estimates.append(
            ProfileEstimate(
                block_dims=block_dims,
                decimals=decimals,
                reduction=config,
                s_cb=s_cb,
                m_vis=estimate_vis_memory(n),
                dedup_ratio=b_rem / b_tot,
            )
        )

    estimates.sort(key=ProfileEstimate.sort_key)
    return estimates if n_best is None else estimates[:n_best]
