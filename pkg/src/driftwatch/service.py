"""HTTP supervision endpoint: register detectors, stream records, poll drift status.

Scoring requests for one detector are applied under a per-detector lock,
so window semantics match the CLI monitor fed the same sequence.
Registered detectors live in process memory only; they do not survive a
restart.
"""
from __future__ import annotations

import threading
import uuid
from collections import deque
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .dataio import detector_from_document, load_detector, record_from_stream_obj
from .errors import FormatError, ParseError, ScoreError, VersionError
from .pipeline import (
    DEFAULT_WINDOW,
    DriftDetector,
    MonitorState,
    monitor_error,
    monitor_step,
    new_monitor,
    score_record,
)

EVENT_LOG_SIZE = 100


@dataclass(eq=False)
class DetectorHandle:
    detector_id: str
    detector: DriftDetector
    monitor: MonitorState
    lock: threading.Lock = field(default_factory=threading.Lock)
    events: deque = field(default_factory=lambda: deque(maxlen=EVENT_LOG_SIZE))


def _status_body(handle: DetectorHandle, n_events: int) -> dict:
    state = handle.monitor
    return {
        "detector_id": handle.detector_id,
        "dim": handle.detector.dim,
        "threshold": handle.detector.threshold,
        "baseline_flag_rate": handle.detector.baseline_flag_rate,
        "n_train": handle.detector.n_train,
        "window_size": state.window_size,
        "alarm_rate": state.alarm_rate,
        "seen": state.seen,
        "scored": state.scored,
        "flagged": state.flagged,
        "errors": state.errors,
        "alarms_raised": state.alarms_raised,
        "alarm_active": state.alarm_active,
        "window_flag_rate": state.window_flag_rate,
        "events": [e.to_json_obj() for e in list(handle.events)[-n_events:]],
    }


def create_app() -> FastAPI:
    app = FastAPI(title="driftwatch")
    registry: dict[str, DetectorHandle] = {}
    registry_lock = threading.Lock()

    def lookup(detector_id: str) -> DetectorHandle | None:
        with registry_lock:
            return registry.get(detector_id)

    @app.post("/detectors")
    async def register(request: Request, window: int = DEFAULT_WINDOW, alarm_rate: float | None = None):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"detail": "body must be JSON"}, status_code=400)
        try:
            if isinstance(body, dict) and "path" in body:
                detector = load_detector(body["path"])
            elif isinstance(body, dict) and "format_version" in body:
                detector = detector_from_document(body)
            else:
                return JSONResponse(
                    {"detail": "body must carry a model 'path' or a detector document"}, status_code=400
                )
            monitor = new_monitor(detector, window=window, alarm_rate=alarm_rate)
        except VersionError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        except (FormatError, ParseError, OSError, ValueError) as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        detector_id = uuid.uuid4().hex
        handle = DetectorHandle(detector_id=detector_id, detector=detector, monitor=monitor)
        with registry_lock:
            registry[detector_id] = handle
        return JSONResponse({"detector_id": detector_id}, status_code=201)

    @app.post("/detectors/{detector_id}/score")
    async def score(detector_id: str, request: Request):
        handle = lookup(detector_id)
        if handle is None:
            return JSONResponse({"detail": "unknown detector"}, status_code=404)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"detail": "body must be JSON"}, status_code=400)
        items = body if isinstance(body, list) else [body]
        results = []
        new_events = []
        with handle.lock:
            for item in items:
                try:
                    record = record_from_stream_obj(item, dim=handle.detector.dim)
                    scored = score_record(handle.detector, record)
                except (ParseError, ScoreError) as exc:
                    event = monitor_error(handle.monitor, str(exc))
                    new_events.append(event)
                    entry = {"error": str(exc)}
                    if isinstance(item, dict) and isinstance(item.get("id"), int):
                        entry["id"] = item["id"]
                    results.append(entry)
                    continue
                results.append({"id": scored.id, "score": scored.score, "flagged": scored.flagged})
                new_events.extend(monitor_step(handle.monitor, scored))
            handle.events.extend(new_events)
            body_out = {
                "results": results,
                "window_flag_rate": handle.monitor.window_flag_rate,
                "alarm_active": handle.monitor.alarm_active,
                "events": [e.to_json_obj() for e in new_events],
            }
        return JSONResponse(body_out)

    @app.get("/detectors/{detector_id}/status")
    async def status(detector_id: str, events: int = 20):
        handle = lookup(detector_id)
        if handle is None:
            return JSONResponse({"detail": "unknown detector"}, status_code=404)
        with handle.lock:
            return JSONResponse(_status_body(handle, max(0, events)))

    @app.delete("/detectors/{detector_id}")
    async def remove(detector_id: str):
        with registry_lock:
            if detector_id not in registry:
                return JSONResponse({"detail": "unknown detector"}, status_code=404)
            del registry[detector_id]
        return Response(status_code=204)

    return app
