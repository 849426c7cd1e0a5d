"""Streaming reconstruction: working-set management and agreement grids.

On every move through the ensemble the resident block set CB is diffed
against the new volume's block set NB:

    keep    = CB intersect NB
    load    = NB - keep
    discard = CB - keep

Only `load` is fetched from disk and only `discard` is evicted, so block
fetches per move equal |load| exactly and residency equals |NB| afterward.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .codebook import CodebookReader
from .dedup import reassemble_volume
from .errors import BudgetExceededError

log = logging.getLogger("ensbook.runtime")


@dataclass(frozen=True)
class WorkingSetDiff:
    keep: frozenset[int]
    load: frozenset[int]
    discard: frozenset[int]


def diff_working_set(current: set[int], new: set[int]) -> WorkingSetDiff:
    keep = frozenset(current & new)
    return WorkingSetDiff(
        keep=keep,
        load=frozenset(new) - keep,
        discard=frozenset(current) - keep,
    )


@dataclass
class SwitchTelemetry:
    coord: tuple[int, int]
    kept: int
    loaded: int
    discarded: int
    bytes_read: int
    millis: float


class WorkingSet:
    """Resident decoded blocks for one viewer session over a codebook."""

    def __init__(self, reader: CodebookReader, byte_budget: int | None = None):
        self.reader = reader
        self.byte_budget = byte_budget
        self.coord: tuple[int, int] | None = None
        self.table: dict[int, np.ndarray] = {}
        self.volume: np.ndarray | None = None
        self.total_loads = 0
        self.total_discards = 0
        self.total_keeps = 0
        self.switches = 0
        self.last: SwitchTelemetry | None = None

    @property
    def resident_ids(self) -> set[int]:
        return set(self.table)

    @property
    def resident_blocks(self) -> int:
        return len(self.table)

    @property
    def resident_bytes(self) -> int:
        return len(self.table) * 4 * self.reader.header.elements

    def switch_to(self, run: int, timestep: int) -> tuple[np.ndarray, WorkingSetDiff]:
        """Move to (run, timestep): diff, stream in the missing blocks,
        evict the stale ones, and reassemble the volume."""
        started = time.perf_counter()
        before = self.reader.counters()
        grid = self.reader.read_grid(run, timestep)
        new_ids = set(int(i) for i in np.unique(grid))
        diff = diff_working_set(self.resident_ids, new_ids)

        needed = len(new_ids) * 4 * self.reader.header.elements
        if self.byte_budget is not None and needed > self.byte_budget:
            raise BudgetExceededError(
                f"volume ({run}, {timestep}) needs {needed} bytes of blocks, "
                f"budget is {self.byte_budget}"
            )

        for block_id in sorted(diff.load):
            self.table[block_id] = self.reader.read_block(block_id)
        for block_id in diff.discard:
            del self.table[block_id]
        self.coord = (run, timestep)

        volume = self._assemble(grid)
        self.volume = volume

        after = self.reader.counters()
        millis = (time.perf_counter() - started) * 1e3
        self.total_loads += len(diff.load)
        self.total_discards += len(diff.discard)
        self.total_keeps += len(diff.keep)
        self.switches += 1
        self.last = SwitchTelemetry(
            coord=(run, timestep),
            kept=len(diff.keep),
            loaded=len(diff.load),
            discarded=len(diff.discard),
            bytes_read=(after["grid_bytes_read"] - before["grid_bytes_read"])
            + (after["payload_bytes_read"] - before["payload_bytes_read"]),
            millis=millis,
        )
        log.info(
            "switch r=%d t=%d keep=%d load=%d discard=%d bytes=%d ms=%.2f",
            run, timestep, len(diff.keep), len(diff.load), len(diff.discard),
            self.last.bytes_read, millis,
        )
        return volume, diff

    def _assemble(self, grid: np.ndarray) -> np.ndarray:
        header = self.reader.header
        n = header.elements
        ids = grid.ravel(order="C")
        blocks = np.empty((ids.size, n), dtype=np.float32)
        for row, block_id in enumerate(ids):
            blocks[row] = self.table[int(block_id)]
        return reassemble_volume(blocks, header.shape.dims, header.spec)


@dataclass
class AgreementGrid:
    """Per-cell fraction of runs whose block ID matches the reference."""

    run: int
    timestep: int
    values: np.ndarray  # (gi, gj, gk) float32 in [1/R, 1]

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def compute_agreement(reader: CodebookReader, run: int, timestep: int) -> AgreementGrid:
    """Agreement across all runs at one timestep, reference (run, timestep).

    Touches grids only: block payloads are never fetched.
    """
    header = reader.header
    reference = reader.read_grid(run, timestep)
    counts = np.zeros(header.grid, dtype=np.int64)
    for r in range(header.shape.runs):
        counts += reader.read_grid(r, timestep) == reference
    values = (counts / header.shape.runs).astype(np.float32)
    return AgreementGrid(run=run, timestep=timestep, values=values)
