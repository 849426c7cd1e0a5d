"""HTTP exploration service over one open codebook.

Each client session owns a streaming working set; navigating via
/api/slice triggers the keep/load/discard diff on the server and the
response headers report the per-switch telemetry.  Binary payloads are raw
little-endian float32.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .codebook import CodebookReader
from .errors import BudgetExceededError
from .runtime import WorkingSet, compute_agreement

DEFAULT_IDLE_SECONDS = 600.0

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>ensbook explorer</title></head>
<body><h1>ensbook explorer service</h1>
<p>No viewer bundle is installed. API endpoints:</p>
<ul>
<li><code>/api/manifest</code></li>
<li><code>/api/slice?session=S&amp;r=0&amp;t=0&amp;axis=z&amp;index=0</code></li>
<li><code>/api/agreement?session=S&amp;r=0&amp;t=0</code></li>
<li><code>/api/volume?session=S&amp;r=0&amp;t=0</code></li>
<li><code>/api/stats?session=S</code></li>
</ul></body></html>
"""


@dataclass
class Session:
    working_set: WorkingSet
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_active: float = field(default_factory=time.monotonic)


class SessionPool:
    def __init__(self, reader, byte_budget, max_sessions, idle_seconds):
        self.reader = reader
        self.byte_budget = byte_budget
        self.max_sessions = max_sessions
        self.idle_seconds = idle_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _purge(self, now: float) -> None:
        dead = [k for k, s in self._sessions.items()
                if now - s.last_active > self.idle_seconds]
        for k in dead:
            del self._sessions[k]

    def get(self, session_id: str, create: bool) -> Session:
        now = time.monotonic()
        with self._lock:
            self._purge(now)
            session = self._sessions.get(session_id)
            if session is None:
                if not create:
                    raise HTTPException(404, f"unknown session {session_id!r}")
                if len(self._sessions) >= self.max_sessions:
                    raise HTTPException(429, "session limit reached")
                session = Session(WorkingSet(self.reader, byte_budget=self.byte_budget))
                self._sessions[session_id] = session
            session.last_active = now
            return session


def _switch(session: Session, r: int, t: int) -> tuple[np.ndarray, dict[str, str]]:
    """Run the working-set switch unless the session is already there."""
    ws = session.working_set
    if ws.coord == (r, t) and ws.volume is not None:
        volume = ws.volume
        telemetry = {"kept": ws.resident_blocks, "loaded": 0, "discarded": 0,
                     "bytes": 0, "ms": 0.0}
    else:
        try:
            volume, diff = ws.switch_to(r, t)
        except BudgetExceededError as exc:
            raise HTTPException(413, str(exc))
        telemetry = {"kept": len(diff.keep), "loaded": len(diff.load),
                     "discarded": len(diff.discard),
                     "bytes": ws.last.bytes_read, "ms": ws.last.millis}
    headers = {
        "X-Keep": str(telemetry["kept"]),
        "X-Load": str(telemetry["loaded"]),
        "X-Discard": str(telemetry["discarded"]),
        "X-Bytes-Read": str(telemetry["bytes"]),
        "X-Switch-Ms": f"{telemetry['ms']:.3f}",
        "Access-Control-Expose-Headers": "*",
    }
    return volume, headers


def create_app(
    reader: CodebookReader,
    byte_budget: int | None = None,
    max_sessions: int = 64,
    idle_seconds: float = DEFAULT_IDLE_SECONDS,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="ensbook explorer")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["*"],
    )
    pool = SessionPool(reader, byte_budget, max_sessions, idle_seconds)
    header = reader.header
    X, Y, Z = header.shape.dims

    def check_coord(r: int, t: int) -> None:
        if not (0 <= r < header.shape.runs and 0 <= t < header.shape.timesteps):
            raise HTTPException(400, f"coordinate ({r}, {t}) out of range")

    @app.get("/api/manifest")
    def manifest() -> dict:
        return {
            "runs": header.shape.runs,
            "timesteps": header.shape.timesteps,
            "dims": list(header.shape.dims),
            "block_dims": list(header.spec.block_dims),
            "grid_dims": list(header.grid),
            "reduction": header.reduction.label,
            "value_peak": header.shape.value_peak,
            "b_rem": header.b_rem,
        }

    @app.get("/api/slice")
    def slice_endpoint(
        session: str = Query(...),
        r: int = Query(...),
        t: int = Query(...),
        axis: str = Query("z"),
        index: int = Query(0),
    ) -> Response:
        check_coord(r, t)
        if axis not in ("x", "y", "z"):
            raise HTTPException(400, f"axis must be x, y or z, got {axis!r}")
        limit = {"x": X, "y": Y, "z": Z}[axis]
        if not 0 <= index < limit:
            raise HTTPException(400, f"slice index {index} out of range [0, {limit})")
        sess = pool.get(session, create=True)
        with sess.lock:
            volume, headers = _switch(sess, r, t)
        if axis == "z":
            plane, shape = volume[:, :, index], (X, Y)
        elif axis == "y":
            plane, shape = volume[:, index, :], (X, Z)
        else:
            plane, shape = volume[index, :, :], (Y, Z)
        headers["X-Slice-Shape"] = f"{shape[0]},{shape[1]}"
        body = np.asarray(plane, dtype="<f4").tobytes(order="F")
        return Response(body, media_type="application/octet-stream", headers=headers)

    @app.get("/api/volume")
    def volume_endpoint(
        session: str = Query(...), r: int = Query(...), t: int = Query(...)
    ) -> Response:
        check_coord(r, t)
        sess = pool.get(session, create=True)
        with sess.lock:
            volume, headers = _switch(sess, r, t)
        body = volume.astype("<f4").tobytes(order="F")
        return Response(body, media_type="application/octet-stream", headers=headers)

    @app.get("/api/agreement")
    def agreement_endpoint(
        session: str = Query(...), r: int = Query(...), t: int = Query(...)
    ) -> Response:
        check_coord(r, t)
        sess = pool.get(session, create=True)
        with sess.lock:
            grid = compute_agreement(reader, r, t)
        summary = {"min": grid.minimum, "mean": grid.mean}
        headers = {
            "X-Summary": json.dumps(summary),
            "X-Grid-Dims": ",".join(str(g) for g in header.grid),
            "Access-Control-Expose-Headers": "*",
        }
        body = grid.values.astype("<f4").tobytes(order="F")
        return Response(body, media_type="application/octet-stream", headers=headers)

    @app.get("/api/stats")
    def stats_endpoint(session: str = Query(...)) -> dict:
        sess = pool.get(session, create=False)
        ws = sess.working_set
        return {
            "loads": ws.total_loads,
            "discards": ws.total_discards,
            "keeps": ws.total_keeps,
            "switches": ws.switches,
            "resident_blocks": ws.resident_blocks,
            "resident_bytes": ws.resident_bytes,
        }

    static = Path(static_dir) if static_dir else None
    if static is not None and static.is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="viewer")
    else:
        @app.get("/")
        def index() -> Response:
            return Response(_FALLBACK_PAGE, media_type="text/html")

    return app
