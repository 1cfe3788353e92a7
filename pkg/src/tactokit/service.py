"""Localhost HTTP service exposing one live session to a browser client.

One session at a time; a second POST /session while one is active is
rejected with 409. Trial events map one-to-one onto engine events, every
confirmed trial is appended to a JSONL log immediately, and device playback
runs on a background thread so the endpoints stay responsive. All timing is
authoritative on the server; the client never sees the pending stimulus.
"""

from __future__ import annotations

import sys
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .cues import Cue, Method, assign_cues
from .device import Sink, SerialSink, VirtualSink, play
from .engine import (
    ADVANCE,
    ANSWER,
    BACKSPACE,
    CONFIRM,
    PLAY,
    Phase,
    ProtocolError,
    Session,
    SessionConfig,
    Study,
)
from .patterns import (
    Corner,
    PatternSet,
    ReferenceFrame,
    TimingParams,
    load_pattern_set,
    shipped_pattern_set,
)
from .synth import compile_schedule


def _load_toml(path: str | Path) -> dict:
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as f:
        return tomllib.load(f)


def parse_cue_overrides(table: dict[str, Any]) -> dict[Corner, Cue]:
    """Config ``cue_overrides``: per-corner cue replacement."""
    overrides = {}
    for corner_name, fields in table.items():
        corner = Corner[corner_name]
        overrides[corner] = Cue(
            carrier_hz=float(fields.get("carrier_hz", 170.0)),
            rough=bool(fields.get("rough", False)),
            mod_hz=float(fields.get("mod_hz", 12.5)),
            drive_level=float(fields.get("drive_level", 1.0)),
        )
    return overrides


def session_config_from_dict(d: dict[str, Any]) -> SessionConfig:
    """Build a SessionConfig from a JSON body or a TOML [session] table."""
    study = Study.parse(d["study"])
    plan = None
    if "phase_plan" in d:
        plan = [(Phase(p), int(n)) for p, n in d["phase_plan"]]
    pattern_set: PatternSet | None = None
    if "pattern_set" in d:
        name = d["pattern_set"]
        pattern_set = (
            load_pattern_set(name) if name.endswith(".txt") else shipped_pattern_set(name)
        )
    cfg = SessionConfig.for_study(
        study,
        participant=str(d.get("participant", "p00")),
        method=Method.parse(d.get("method", "baseline")),
        posture=str(d.get("posture", "Forward")),
        reference_frame=ReferenceFrame[d.get("reference_frame", "RF1")],
        phase_plan=plan,
        pattern_set=pattern_set,
        condition_order_index=int(d.get("condition_order_index", 0)),
    )
    if "isi_s" in d or "burst_s" in d:
        import dataclasses

        timing = TimingParams(
            burst_s=float(d.get("burst_s", cfg.timing.burst_s)),
            isi_s=float(d.get("isi_s", cfg.timing.isi_s)),
        )
        cfg = dataclasses.replace(cfg, timing=timing)
    return cfg


def make_sink(spec: str) -> Sink | None:
    """Sink spec: 'virtual', 'instant' (virtual, no sleeps), 'serial:<port>',
    or 'none' (no device playback; the engine clock still runs)."""
    if spec == "none":
        return None
    if spec == "virtual":
        return VirtualSink(realtime=True)
    if spec == "instant":
        return VirtualSink(realtime=False)
    if spec.startswith("serial:"):
        return SerialSink(spec.split(":", 1)[1])
    raise ValueError(f"unknown sink spec {spec!r}")


class SessionHost:
    """Owns the single live session, its log file, and device playback."""

    def __init__(self, sink_spec: str = "none", log_path: str | Path | None = None):
        self.sink_spec = sink_spec
        self.default_log_path = Path(log_path) if log_path else None
        self.cue_overrides: dict[Corner, Cue] = {}
        self.lock = threading.Lock()
        self.session: Session | None = None
        self.log_path: Path | None = None
        self._sink: Sink | None = None

    def start(self, cfg: SessionConfig, log_path: str | Path | None = None) -> dict:
        with self.lock:
            if self.session is not None and not self.session.completed:
                raise ProtocolError("a session is already active")
            self.session = Session(cfg)
            self.log_path = Path(log_path) if log_path else self.default_log_path
            if self.log_path:
                self.log_path.parent.mkdir(parents=True, exist_ok=True)
                self.log_path.touch()
            self._sink = make_sink(self.sink_spec)
            return self.session.view()

    def _require(self) -> Session:
        if self.session is None:
            raise HTTPException(status_code=404, detail="no session")
        return self.session

    def apply(self, event) -> dict:
        with self.lock:
            session = self._require()
            result = session.step(event)
            if result.record is not None and self.log_path:
                with open(self.log_path, "a", encoding="utf-8") as f:
                    f.write(result.record.to_json() + "\n")
            if result.play_label is not None and self._sink is not None:
                self._play_async(session, result.play_label)
            return session.view()

    def _play_async(self, session: Session, label: str) -> None:
        cfg = session.cfg
        cues = assign_cues(cfg.method).with_overrides(self.cue_overrides) \
            if self.cue_overrides else assign_cues(cfg.method)
        schedule = compile_schedule(
            cfg.pattern_set.get(label), cues, cfg.reference_frame, cfg.timing
        )
        sink = self._sink
        threading.Thread(
            target=play, args=(schedule, sink), daemon=True, name="tactokit-playback"
        ).start()


def create_app(host: SessionHost | None = None) -> FastAPI:
    host = host or SessionHost()
    app = FastAPI(title="tactokit session service")
    app.state.host = host

    @app.exception_handler(ProtocolError)
    async def protocol_error(request, exc: ProtocolError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.post("/session")
    def start_session(body: dict):
        try:
            cfg = session_config_from_dict(body)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return host.start(cfg, body.get("log_path"))

    @app.get("/session/state")
    def state():
        with host.lock:
            return host._require().view()

    @app.post("/trial/play")
    def trial_play():
        return host.apply(PLAY())

    @app.post("/trial/answer")
    def trial_answer(body: dict):
        labels = body.get("labels", [])
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise HTTPException(status_code=400, detail="labels must be a string list")
        return host.apply(ANSWER(*labels))

    @app.post("/trial/backspace")
    def trial_backspace():
        return host.apply(BACKSPACE())

    @app.post("/trial/confirm")
    def trial_confirm():
        return host.apply(CONFIRM())

    @app.post("/session/advance")
    def session_advance():
        return host.apply(ADVANCE())

    return app


def serve_from_config(path: str | Path, port: int | None = None) -> None:
    """CLI entry: load a TOML config, optionally auto-start its session."""
    import uvicorn

    doc = _load_toml(path)
    server = doc.get("server", {})
    host = SessionHost(
        sink_spec=server.get("sink", "none"),
        log_path=server.get("log"),
    )
    if "cue_overrides" in doc:
        host.cue_overrides = parse_cue_overrides(doc["cue_overrides"])
    app = create_app(host)
    if "ui_dir" in server:
        # serve the built browser UI same-origin, after the API routes
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=server["ui_dir"], html=True))
    if "session" in doc:
        host.start(session_config_from_dict(doc["session"]))
    uvicorn.run(
        app,
        host=server.get("bind", "127.0.0.1"),
        port=int(port or server.get("port", 7341)),
        log_level="warning",
    )
