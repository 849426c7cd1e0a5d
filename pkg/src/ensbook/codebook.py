"""On-disk codebook container: grids + block lookup table + reduction metadata.

Binary layout (all integers little-endian, all scalars IEEE-754 32-bit
unless noted):

    header        fixed-size struct, magic "NEAC", version 1
    grid section  R*T grids in (r, t) scan order, each gi*gj*gk uint32
                  canonical IDs serialized i-fastest / k-slowest
    block index   per canonical ID: uint64 byte offset + uint64 byte length
    metadata      PCA mean (n float32) + basis (m*n float32); empty otherwise
    payloads      encoded blocks, contiguous, in canonical ID order

Section offsets live in the header, so a reader touches only the header,
the index, one grid, and the payload extents it actually needs.
"""

from __future__ import annotations

import mmap
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dedup import BlockSpec, DedupResult, ID_DTYPE, grid_dims
from .errors import (
    BadMagicError,
    BlockDecodeError,
    CodebookFormatError,
    IndexBoundsError,
    TruncatedIndexError,
    VersionMismatchError,
)
from .model import EnsembleShape
from .reduction import PcaModel, ReductionConfig, decode_payload, encode_representatives

MAGIC = b"NEAC"
VERSION = 1

_HEADER = struct.Struct("<4sI II III f III i f III B3x I f I I Q QQQQQQQQ")
_KIND_CODES = {"none": 0, "pca": 1, "wavelet": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_FLAG_PCA_DEGENERATE = 1


@dataclass(frozen=True)
class CodebookHeader:
    shape: EnsembleShape
    spec: BlockSpec
    grid: tuple[int, int, int]
    reduction: ReductionConfig
    pca_degenerate: bool
    b_rem: int
    b_tot: int
    grid_off: int
    grid_size: int
    index_off: int
    index_size: int
    meta_off: int
    meta_size: int
    payload_off: int
    payload_size: int

    @property
    def elements(self) -> int:
        return self.spec.elements

    @property
    def blocks_per_volume(self) -> int:
        return int(np.prod(self.grid))


@dataclass(frozen=True)
class WriteSummary:
    path: Path
    file_size: int
    header_bytes: int
    grid_bytes: int
    index_bytes: int
    meta_bytes: int
    payload_bytes: int

    def sections(self) -> dict[str, int]:
        return {
            "header": self.header_bytes,
            "grids": self.grid_bytes,
            "index": self.index_bytes,
            "metadata": self.meta_bytes,
            "payload": self.payload_bytes,
        }


def _pack_header(h: CodebookHeader) -> bytes:
    flags = _FLAG_PCA_DEGENERATE if h.pca_degenerate else 0
    return _HEADER.pack(
        MAGIC,
        VERSION,
        h.shape.runs,
        h.shape.timesteps,
        *h.shape.dims,
        h.shape.value_peak,
        *h.spec.block_dims,
        h.spec.decimals,
        h.spec.fill_value,
        *h.grid,
        _KIND_CODES[h.reduction.kind],
        h.reduction.components or 0,
        h.reduction.quality if h.reduction.quality is not None else 0.0,
        flags,
        h.b_rem,
        h.b_tot,
        h.grid_off,
        h.grid_size,
        h.index_off,
        h.index_size,
        h.meta_off,
        h.meta_size,
        h.payload_off,
        h.payload_size,
    )


def write_codebook(dedup: DedupResult, config: ReductionConfig, path) -> WriteSummary:
    """Encode representatives and write the whole container atomically.

    On any failure the partially written temporary file is removed.
    """
    path = Path(path)
    spec = dedup.spec
    config.check_block_dims(spec.block_dims)
    if len(dedup.coords) != dedup.shape_runs * dedup.shape_timesteps:
        raise ValueError("cannot write a codebook from a partial (sampled) dedup run")

    payloads, model = encode_representatives(dedup.representatives, spec.block_dims, config)

    grid_bytes = 4 * int(np.prod(dedup.grid)) * len(dedup.coords)
    index_bytes = 16 * len(payloads)
    if model is not None:
        meta = model.mean.astype("<f4").tobytes() + model.basis.astype("<f4").tobytes()
    else:
        meta = b""
    payload_bytes = sum(len(p) for p in payloads)

    grid_off = _HEADER.size
    index_off = grid_off + grid_bytes
    meta_off = index_off + index_bytes
    payload_off = meta_off + len(meta)
    header = CodebookHeader(
        shape=EnsembleShape(
            dedup.shape_runs, dedup.shape_timesteps, dedup.volume_dims, dedup.value_peak
        ),
        spec=spec,
        grid=dedup.grid,
        reduction=config,
        pca_degenerate=bool(model.degenerate) if model is not None else False,
        b_rem=len(payloads),
        b_tot=dedup.b_tot,
        grid_off=grid_off,
        grid_size=grid_bytes,
        index_off=index_off,
        index_size=index_bytes,
        meta_off=meta_off,
        meta_size=len(meta),
        payload_off=payload_off,
        payload_size=payload_bytes,
    )

    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(_pack_header(header))
            for vi in range(len(dedup.coords)):
                fh.write(dedup.grids[vi].astype(ID_DTYPE).tobytes(order="F"))
            offset = payload_off
            index = bytearray()
            for p in payloads:
                index += struct.pack("<QQ", offset, len(p))
                offset += len(p)
            fh.write(bytes(index))
            fh.write(meta)
            for p in payloads:
                fh.write(p)
            fh.flush()
            os.fsync(fh.fileno())
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    os.replace(tmp, path)

    file_size = path.stat().st_size
    return WriteSummary(
        path=path,
        file_size=file_size,
        header_bytes=_HEADER.size,
        grid_bytes=grid_bytes,
        index_bytes=index_bytes,
        meta_bytes=len(meta),
        payload_bytes=payload_bytes,
    )


def _unpack_header(buf: bytes, file_size: int) -> CodebookHeader:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError("bad magic: not a codebook file")
    if len(buf) < _HEADER.size:
        raise CodebookFormatError(f"header truncated: {len(buf)} of {_HEADER.size} bytes")
    fields = _HEADER.unpack_from(buf)
    (
        _magic, version, runs, timesteps, x, y, z, value_peak,
        bx, by, bz, decimals, fill_value, gi, gj, gk,
        kind_code, pca_m, wav_q, flags, b_rem, b_tot,
        grid_off, grid_size, index_off, index_size,
        meta_off, meta_size, payload_off, payload_size,
    ) = fields
    if version != VERSION:
        raise VersionMismatchError(f"unsupported codebook version {version}")
    if kind_code not in _KIND_NAMES:
        raise CodebookFormatError(f"unknown reduction code {kind_code}")
    if min(runs, timesteps, x, y, z, bx, by, bz) < 1:
        raise CodebookFormatError("header declares empty dims")
    if (gi, gj, gk) != grid_dims((x, y, z), (bx, by, bz)):
        raise CodebookFormatError("grid dims inconsistent with volume and block dims")

    kind = _KIND_NAMES[kind_code]
    try:
        reduction = ReductionConfig(
            kind,
            components=pca_m if kind == "pca" else None,
            quality=wav_q if kind == "wavelet" else None,
        )
    except ValueError as exc:
        raise CodebookFormatError(f"bad reduction parameters: {exc}") from exc
    try:
        shape = EnsembleShape(runs, timesteps, (x, y, z), value_peak)
        spec = BlockSpec((bx, by, bz), decimals, fill_value)
        reduction.check_block_dims(spec.block_dims)
    except ValueError as exc:
        raise CodebookFormatError(str(exc)) from exc

    expected_grid = 4 * gi * gj * gk * runs * timesteps
    if grid_off != _HEADER.size or grid_size != expected_grid:
        raise CodebookFormatError("grid section does not match header geometry")
    if index_off != grid_off + grid_size or index_size != 16 * b_rem:
        raise TruncatedIndexError("index section does not match header geometry")
    if meta_off != index_off + index_size or payload_off != meta_off + meta_size:
        raise CodebookFormatError("section offsets are not contiguous")
    if index_off + index_size > file_size:
        raise TruncatedIndexError(
            f"file is {file_size} bytes but the index ends at {index_off + index_size}"
        )
    if meta_off + meta_size > file_size:
        raise CodebookFormatError("metadata section extends past end of file")
    if b_rem < 1 or b_tot < b_rem:
        raise CodebookFormatError("dedup statistics are inconsistent")

    return CodebookHeader(
        shape=shape,
        spec=spec,
        grid=(gi, gj, gk),
        reduction=reduction,
        pca_degenerate=bool(flags & _FLAG_PCA_DEGENERATE),
        b_rem=b_rem,
        b_tot=b_tot,
        grid_off=grid_off,
        grid_size=grid_size,
        index_off=index_off,
        index_size=index_size,
        meta_off=meta_off,
        meta_size=meta_size,
        payload_off=payload_off,
        payload_size=payload_size,
    )


class CodebookReader:
    """Random access to grids and decoded blocks of one codebook file.

    Thread-safe for concurrent reads.  Byte counters are cumulative and
    serve the working-set instrumentation.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._file = open(self.path, "rb")
        try:
            file_size = os.fstat(self._file.fileno()).st_size
            head = self._file.read(_HEADER.size)
            self.header = _unpack_header(head, file_size)
            self._file_size = file_size
            self._mm = mmap.mmap(self._file.fileno(), 0, access=mmap.ACCESS_READ)
            self._load_index()
            self._load_metadata()
        except BaseException:
            self._file.close()
            raise
        self._lock = threading.Lock()
        self.grid_bytes_read = 0
        self.payload_bytes_read = 0
        self.payload_blocks_read = 0

    def _load_index(self) -> None:
        h = self.header
        raw = self._mm[h.index_off : h.index_off + h.index_size]
        if len(raw) != h.index_size:
            raise TruncatedIndexError("index bytes missing from file")
        entries = np.frombuffer(raw, dtype="<u8").reshape(h.b_rem, 2)
        offsets, lengths = entries[:, 0], entries[:, 1]
        ends = offsets + lengths
        if h.b_rem:
            if offsets[0] < h.payload_off:
                raise IndexBoundsError("first block offset precedes the payload section")
            if (offsets[1:] < ends[:-1]).any():
                raise IndexBoundsError("block extents overlap or are out of order")
            if ends[-1] > h.payload_off + h.payload_size:
                raise IndexBoundsError("block extent exceeds the payload section")
        self._offsets = offsets.copy()
        self._lengths = lengths.copy()

    def _load_metadata(self) -> None:
        h = self.header
        self.model: PcaModel | None = None
        if h.reduction.kind != "pca":
            if h.meta_size != 0:
                raise CodebookFormatError("unexpected metadata for this reduction")
            return
        n, m = h.elements, h.reduction.components
        expected = 4 * n + 4 * m * n
        if h.meta_size != expected:
            raise CodebookFormatError(
                f"pca metadata is {h.meta_size} bytes, expected {expected}"
            )
        raw = self._mm[h.meta_off : h.meta_off + h.meta_size]
        mean = np.frombuffer(raw[: 4 * n], dtype="<f4").copy()
        basis = np.frombuffer(raw[4 * n :], dtype="<f4").reshape(m, n).copy()
        self.model = PcaModel(mean=mean, basis=basis, degenerate=h.pca_degenerate)

    # -- access -----------------------------------------------------------

    def read_grid(self, run: int, timestep: int) -> np.ndarray:
        h = self.header
        if not (0 <= run < h.shape.runs and 0 <= timestep < h.shape.timesteps):
            raise IndexError(f"coordinate ({run}, {timestep}) out of range")
        cells = h.blocks_per_volume
        nbytes = 4 * cells
        start = h.grid_off + nbytes * (run * h.shape.timesteps + timestep)
        raw = self._mm[start : start + nbytes]
        if len(raw) != nbytes:
            raise CodebookFormatError(f"grid ({run}, {timestep}) truncated")
        with self._lock:
            self.grid_bytes_read += nbytes
        grid = np.frombuffer(raw, dtype=ID_DTYPE).reshape(h.grid, order="F").copy(order="F")
        if int(grid.max(initial=0)) >= h.b_rem:
            raise IndexBoundsError(f"grid ({run}, {timestep}) references an unknown block ID")
        return grid

    def block_extent(self, block_id: int) -> tuple[int, int]:
        if not 0 <= block_id < self.header.b_rem:
            raise IndexError(f"block ID {block_id} out of range [0, {self.header.b_rem})")
        return int(self._offsets[block_id]), int(self._lengths[block_id])

    def read_block(self, block_id: int) -> np.ndarray:
        """Fetch one payload and decode it to a flattened float32 block."""
        offset, length = self.block_extent(block_id)
        raw = self._mm[offset : offset + length]
        if len(raw) != length:
            raise BlockDecodeError(f"payload for block {block_id} truncated on disk")
        with self._lock:
            self.payload_bytes_read += length
            self.payload_blocks_read += 1
        try:
            return decode_payload(raw, self.header.spec.block_dims, self.header.reduction, self.model)
        except BlockDecodeError as exc:
            raise BlockDecodeError(f"block {block_id}: {exc}") from exc

    def counters(self) -> dict[str, int]:
        with self._lock:
            return {
                "grid_bytes_read": self.grid_bytes_read,
                "payload_bytes_read": self.payload_bytes_read,
                "payload_blocks_read": self.payload_blocks_read,
            }

    def close(self) -> None:
        if self._file.closed:
            return
        self._mm.close()
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_codebook(path) -> CodebookReader:
    """Open and validate a codebook for streaming access.

    Validation covers magic, version, header consistency, and the block
    index; payload bytes are only touched by read_block, so a file truncated
    mid-payload still opens and fails only on the affected IDs.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"codebook not found: {path}")
    try:
        return CodebookReader(path)
    except (CodebookFormatError, FileNotFoundError):
        raise
    except (struct.error, ValueError, OverflowError, OSError) as exc:
        raise CodebookFormatError(f"malformed codebook: {exc}") from exc
