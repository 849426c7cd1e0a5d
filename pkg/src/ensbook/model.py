"""Ensemble data model: shapes, coordinates, manifests, raw volume I/O.

An ensemble is a 2-D grid of volumes indexed by (run, timestep).  Volumes
are dense 3-D arrays of 32-bit floats stored on disk little-endian with
the X axis varying fastest.  A manifest is a JSON document describing
where every (run, timestep) volume lives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ManifestError, VolumeReadError

VOXEL_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class EnsembleShape:
    """Extent of the ensemble space plus the volume geometry."""

    runs: int
    timesteps: int
    dims: tuple[int, int, int]
    value_peak: float = 1.0

    def __post_init__(self):
        if self.runs < 1 or self.timesteps < 1:
            raise ValueError("ensemble needs at least one run and one timestep")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"volume dims must be >= 1, got {self.dims}")

    @property
    def volume_count(self) -> int:
        return self.runs * self.timesteps

    @property
    def voxels_per_volume(self) -> int:
        x, y, z = self.dims
        return x * y * z

    @property
    def volume_bytes(self) -> int:
        return 4 * self.voxels_per_volume

    @property
    def original_bytes(self) -> int:
        """Total raw size of the ensemble on disk."""
        return self.volume_bytes * self.volume_count


@dataclass(frozen=True)
class EnsembleCoordinate:
    run: int
    timestep: int

    def check(self, shape: EnsembleShape) -> None:
        if not (0 <= self.run < shape.runs and 0 <= self.timestep < shape.timesteps):
            raise ValueError(
                f"coordinate ({self.run}, {self.timestep}) outside ensemble "
                f"{shape.runs}x{shape.timesteps}"
            )


@dataclass(frozen=True)
class ManifestEntry:
    run: int
    timestep: int
    path: str
    offset: int = 0


@dataclass
class EnsembleManifest:
    """Validated listing of every volume file in an ensemble."""

    shape: EnsembleShape
    entries: dict[tuple[int, int], ManifestEntry]
    base_dir: Path
    variable_name: str = ""
    source_path: Path | None = None

    def entry(self, run: int, timestep: int) -> ManifestEntry:
        return self.entries[(run, timestep)]

    def volume_path(self, run: int, timestep: int) -> Path:
        return self.base_dir / self.entries[(run, timestep)].path

    def coordinates(self):
        """All (run, timestep) pairs in scan order (run outer)."""
        for r in range(self.shape.runs):
            for t in range(self.shape.timesteps):
                yield (r, t)


def load_manifest(path) -> EnsembleManifest:
    """Load and validate a manifest document.

    The coordinate set must be exactly [0, runs) x [0, timesteps): gaps and
    duplicates are rejected with the offending coordinate named.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"manifest not found: {path}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest root must be an object")

    for key in ("runs", "timesteps", "dims", "entries"):
        if key not in doc:
            raise ManifestError(f"manifest missing field '{key}'")
    try:
        runs = int(doc["runs"])
        timesteps = int(doc["timesteps"])
        dims = tuple(int(d) for d in doc["dims"])
        value_peak = float(doc.get("value_peak", 1.0))
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"manifest field has wrong type: {exc}") from exc
    if len(dims) != 3:
        raise ManifestError(f"dims must have 3 components, got {len(dims)}")
    try:
        shape = EnsembleShape(runs, timesteps, dims, value_peak)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc

    raw_entries = doc["entries"]
    if not isinstance(raw_entries, list):
        raise ManifestError("entries must be an array")
    entries: dict[tuple[int, int], ManifestEntry] = {}
    for item in raw_entries:
        try:
            r, t = int(item["r"]), int(item["t"])
            entry = ManifestEntry(r, t, str(item["path"]), int(item.get("offset", 0)))
        except (TypeError, KeyError, ValueError) as exc:
            raise ManifestError(f"bad entry {item!r}: {exc}") from exc
        if not (0 <= r < runs and 0 <= t < timesteps):
            raise ManifestError(f"entry coordinate ({r}, {t}) out of range")
        if (r, t) in entries:
            raise ManifestError(f"duplicate coordinate ({r}, {t})")
        entries[(r, t)] = entry
    for r in range(runs):
        for t in range(timesteps):
            if (r, t) not in entries:
                raise ManifestError(f"coordinate gap at ({r}, {t})")

    return EnsembleManifest(
        shape=shape,
        entries=entries,
        base_dir=path.parent,
        variable_name=str(doc.get("variable", "")),
        source_path=path,
    )


def save_manifest(manifest: EnsembleManifest, path) -> None:
    path = Path(path)
    doc = {
        "runs": manifest.shape.runs,
        "timesteps": manifest.shape.timesteps,
        "dims": list(manifest.shape.dims),
        "value_peak": manifest.shape.value_peak,
        "variable": manifest.variable_name,
        "entries": [
            {"r": e.run, "t": e.timestep, "path": e.path}
            for e in (manifest.entries[c] for c in sorted(manifest.entries))
        ],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_volume(manifest: EnsembleManifest, coord: EnsembleCoordinate) -> np.ndarray:
    """Read one raw volume, bit-exact with the on-disk little-endian bytes.

    Returns a float32 array indexed [x, y, z].  Short files and non-finite
    values are rejected.
    """
    coord.check(manifest.shape)
    entry = manifest.entry(coord.run, coord.timestep)
    nbytes = manifest.shape.volume_bytes
    path = manifest.base_dir / entry.path
    with open(path, "rb") as fh:
        if entry.offset:
            fh.seek(entry.offset)
        buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise VolumeReadError(f"{path}: expected {nbytes} bytes, got {len(buf)}")
    data = np.frombuffer(buf, dtype=VOXEL_DTYPE).reshape(manifest.shape.dims, order="F")
    if not np.isfinite(data).all():
        pos = tuple(int(v) for v in np.argwhere(~np.isfinite(data))[0])
        raise VolumeReadError(f"{path}: non-finite value at {pos}")
    return data


def write_volume(path, data: np.ndarray) -> None:
    """Write a volume as raw little-endian float32, X fastest."""
    arr = np.asarray(data, dtype=VOXEL_DTYPE)
    with open(path, "wb") as fh:
        fh.write(arr.tobytes(order="F"))
