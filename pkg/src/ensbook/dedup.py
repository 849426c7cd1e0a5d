"""Block partitioning, quantized hashing, and ensemble-wide deduplication.

Volumes are cut into uniform x*y*z blocks (edge blocks padded with a fill
value), each block is flattened X-fastest, rounded to a configurable decimal
place, and hashed with SHA-256.  Blocks sharing a digest are collapsed to a
single representative; canonical IDs are assigned in (r, t, i, j, k) scan
order so the result is independent of processing order.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import VolumeReadError
from .model import EnsembleCoordinate, EnsembleManifest, read_volume

ID_DTYPE = np.dtype("<u4")


@dataclass(frozen=True)
class BlockSpec:
    """Block geometry and matching precision for deduplication."""

    block_dims: tuple[int, int, int]
    decimals: int
    fill_value: float = 0.0

    def __post_init__(self):
        if any(d < 1 for d in self.block_dims):
            raise ValueError(f"block dims must be >= 1, got {self.block_dims}")

    @property
    def elements(self) -> int:
        x, y, z = self.block_dims
        return x * y * z

    @property
    def power_of_two(self) -> bool:
        return all(d & (d - 1) == 0 for d in self.block_dims)


def grid_dims(volume_dims: Sequence[int], block_dims: Sequence[int]) -> tuple[int, int, int]:
    """Blocks per axis: ceiling division of volume dims by block dims."""
    if any(d < 1 for d in volume_dims) or any(b < 1 for b in block_dims):
        raise ValueError("dims must be >= 1")
    gi, gj, gk = (math.ceil(d / b) for d, b in zip(volume_dims, block_dims))
    return (gi, gj, gk)


def block_matrix(volume: np.ndarray, spec: BlockSpec) -> np.ndarray:
    """All blocks of a volume as a (gi*gj*gk, n) float32 matrix.

    Rows are ordered lexicographically by (i, j, k); within a row the block
    is flattened X-fastest.  Out-of-volume voxels hold the fill value.
    """
    bx, by, bz = spec.block_dims
    gi, gj, gk = grid_dims(volume.shape, spec.block_dims)
    pad = [(0, g * b - d) for g, b, d in zip((gi, gj, gk), (bx, by, bz), volume.shape)]
    padded = np.pad(volume.astype(np.float32, copy=False), pad,
                    constant_values=np.float32(spec.fill_value))
    parts = padded.reshape(gi, bx, gj, by, gk, bz)
    # (i, j, k) block order with in-block axes arranged so that a C-order
    # ravel yields the X-fastest flattening.
    parts = parts.transpose(0, 2, 4, 5, 3, 1)
    return np.ascontiguousarray(parts).reshape(gi * gj * gk, spec.elements)


def reassemble_volume(
    blocks: np.ndarray, volume_dims: tuple[int, int, int], spec: BlockSpec
) -> np.ndarray:
    """Inverse of :func:`block_matrix`: rebuild the volume and crop padding."""
    bx, by, bz = spec.block_dims
    gi, gj, gk = grid_dims(volume_dims, spec.block_dims)
    parts = blocks.reshape(gi, gj, gk, bz, by, bx).transpose(0, 5, 1, 4, 2, 3)
    padded = np.ascontiguousarray(parts).reshape(gi * bx, gj * by, gk * bz)
    x, y, z = volume_dims
    return padded[:x, :y, :z]


def partition_volume(
    volume: np.ndarray, spec: BlockSpec
) -> Iterator[tuple[tuple[int, int, int], np.ndarray]]:
    """Yield ((i, j, k), flattened block) for every block in scan order."""
    gd = grid_dims(volume.shape, spec.block_dims)
    mat = block_matrix(volume, spec)
    for flat, pos in enumerate(np.ndindex(gd)):
        yield pos, mat[flat]


def round_vector(values: np.ndarray, decimals: int) -> np.ndarray:
    """Round-half-to-even of value * 10^decimals, as int64.

    The rounded vector is the hash input and defines which blocks count as
    equivalent data.
    """
    scaled = np.asarray(values, dtype=np.float64) * (10.0 ** decimals)
    if not np.isfinite(scaled).all():
        raise OverflowError("non-finite value after decimal scaling")
    if np.abs(scaled).max(initial=0.0) >= 2.0**62:
        raise OverflowError("scaled value exceeds 2^62; decimals too large for data")
    return np.rint(scaled).astype(np.int64)


def hash_block(rounded: np.ndarray, decimals: int) -> bytes:
    """SHA-256 over the int64 little-endian bytes, prefixed by the decimal
    setting as one little-endian int32 so differing precisions never alias."""
    h = hashlib.sha256(struct.pack("<i", decimals))
    h.update(np.ascontiguousarray(rounded, dtype="<i8").tobytes())
    return h.digest()


@dataclass
class DedupResult:
    """Grids of canonical IDs plus the minimum representative set."""

    shape_runs: int
    shape_timesteps: int
    volume_dims: tuple[int, int, int]
    value_peak: float
    spec: BlockSpec
    grid: tuple[int, int, int]
    coords: list[tuple[int, int]]
    grids: np.ndarray            # (len(coords), gi, gj, gk) uint32
    representatives: np.ndarray  # (b_rem, n) float32
    b_tot: int = 0
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def b_rem(self) -> int:
        return len(self.representatives)

    def grid_for(self, run: int, timestep: int) -> np.ndarray:
        if not self._index:
            self._index.update({c: i for i, c in enumerate(self.coords)})
        return self.grids[self._index[(run, timestep)]]


ProgressSink = Callable[[int, int], None]


def deduplicate(
    manifest: EnsembleManifest,
    spec: BlockSpec,
    progress: ProgressSink | None = None,
    coords: Sequence[tuple[int, int]] | None = None,
) -> DedupResult:
    """Group every block of the ensemble by rounded-data digest.

    ``coords`` restricts processing to a subset of (run, timestep) volumes
    (used by the profiler); the default covers the whole ensemble.  The
    representative of each group is the member with the lexicographically
    smallest (r, t, i, j, k), and canonical IDs count up in first-appearance
    scan order, so two runs over the same input agree byte for byte.
    """
    shape = manifest.shape
    if coords is None:
        coords = list(manifest.coordinates())
    else:
        coords = [(int(r), int(t)) for r, t in coords]
    gd = grid_dims(shape.dims, spec.block_dims)
    blocks_per_volume = int(np.prod(gd))

    ids_by_digest: dict[bytes, int] = {}
    representatives: list[np.ndarray] = []
    grids = np.zeros((len(coords),) + gd, dtype=ID_DTYPE)

    for vi, (r, t) in enumerate(coords):
        try:
            volume = read_volume(manifest, EnsembleCoordinate(r, t))
        except (OSError, VolumeReadError) as exc:
            raise VolumeReadError(f"volume ({r}, {t}): {exc}") from exc
        mat = block_matrix(volume, spec)
        rounded = round_vector(mat, spec.decimals)
        flat_ids = np.empty(len(mat), dtype=ID_DTYPE)
        for row in range(len(mat)):
            digest = hash_block(rounded[row], spec.decimals)
            bid = ids_by_digest.get(digest)
            if bid is None:
                bid = len(representatives)
                ids_by_digest[digest] = bid
                representatives.append(mat[row].copy())
            flat_ids[row] = bid
        grids[vi] = flat_ids.reshape(gd)
        if progress is not None:
            progress(vi + 1, len(representatives))

    reps = (
        np.stack(representatives)
        if representatives
        else np.empty((0, spec.elements), dtype=np.float32)
    )
    return DedupResult(
        shape_runs=shape.runs,
        shape_timesteps=shape.timesteps,
        volume_dims=shape.dims,
        value_peak=shape.value_peak,
        spec=spec,
        grid=gd,
        coords=coords,
        grids=grids,
        representatives=reps,
        b_tot=blocks_per_volume * len(coords),
    )
