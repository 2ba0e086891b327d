"""HTTP + WebSocket service exposing the engine to interactive clients.

Endpoints:
    POST /sessions                      create a session (robot kind + scenario)
    GET  /sessions/{id}/state           current configuration and result status
    POST /sessions/{id}/jog             joint or cartesian jog increment
    PUT  /sessions/{id}/program         upload the program under edit
    POST /sessions/{id}/runs            launch the pipeline on the stored program
    GET  /runs/{id}                     run status
    GET  /runs/{id}/artifacts/{kind}    fetch one artifact document
    WS   /sessions/{id}/events          event stream {seq, ts, type, payload}

Events for one session are strictly ordered by seq. State frames may be
dropped under backpressure (bounded per-connection queues, drop-oldest);
terminal run events are never dropped. Runs execute on a worker thread, one
in flight per session, later requests queue on the session lock.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from .kinematics import (
    KinematicsError,
    check_limits,
    fk_all,
    forward_kinematics,
    ik_solve,
    solve_closure,
    zero_configuration,
)
from .model import ModelError, PayloadSpec, ScalingLaw, ScenarioConfig, FrictionParams
from .pipeline import PipelineError, run_pipeline
from .robots import build_robot, reach
from .sizing import SizingConfig, load_catalog
from .trajectory import program_from_document
from .transforms import rotation_to_quat

MAX_JOG_JOINT = 0.1  # rad per command
MAX_JOG_CART = 0.05  # m per command
MAX_JOG_RATE_HZ = 20.0
STATE_QUEUE_LIMIT = 256

ARTIFACT_FILES = {
    "trajectory": "trajectory.csv",
    "trajectory_manifest": "trajectory_manifest.json",
    "torque_demo": "torque_demo.csv",
    "torque_pro": "torque_pro.csv",
    "metrics": "metrics.csv",
    "sizing": "sizing.json",
    "manifest": "manifest.json",
    "model": "model.json",
    "plot_data": "plot_data.json",
}


@dataclass
class Run:
    id: str
    session_id: str
    status: str = "queued"  # queued | running | done | failed
    stage: str = ""
    error: str = ""
    directory: Path | None = None
    artifacts: dict = field(default_factory=dict)


@dataclass
class Session:
    id: str
    kind: str
    model: object
    scenario: ScenarioConfig
    q: np.ndarray
    seq: int = 0
    program: dict | None = None
    last_run_id: str | None = None
    results_valid: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list = field(default_factory=list)
    events: list = field(default_factory=list)


def _scenario_from_document(doc: dict) -> ScenarioConfig:
    law = ScalingLaw(
        mass_exponent=float(doc.get("mass_exponent", 3.0)),
        inertia_exponent=float(doc.get("inertia_exponent", 5.0)),
    )
    payload = None
    if doc.get("payload_mass_kg") is not None:
        payload = PayloadSpec(
            mass=float(doc["payload_mass_kg"]),
            com_offset=doc.get("payload_com_m", (0.0, 0.0, 0.0)),
            inertia=np.asarray(doc.get("payload_inertia_kgm2", np.zeros((3, 3)))),
        )
    friction = tuple(
        FrictionParams(viscous=float(f["viscous"]), coulomb=float(f["coulomb"]))
        for f in doc.get("friction", [])
    )
    return ScenarioConfig(
        scale=float(doc.get("scale", 1.0)),
        scaling_law=law,
        payload=payload,
        friction=friction,
        gravity=np.asarray(doc.get("gravity", (0.0, 0.0, -9.81)), dtype=float),
    )


def create_app(artifact_root: str | None = None, catalog_document: dict | None = None) -> FastAPI:
    app = FastAPI(title="armsizer", version="0.1.0")
    root = Path(artifact_root or tempfile.mkdtemp(prefix="armsizer_runs_"))
    root.mkdir(parents=True, exist_ok=True)

    sessions: dict[str, Session] = {}
    runs: dict[str, Run] = {}
    session_counter = itertools.count(1)
    run_counter = itertools.count(1)
    registry_lock = threading.Lock()

    if catalog_document is None:
        from .fixtures import load_benchmark_catalog_document

        catalog_document = load_benchmark_catalog_document()
    catalog = load_catalog(catalog_document)

    # -- events -----------------------------------------------------------

    def emit(session: Session, type_: str, payload: dict):
        with registry_lock:
            session.seq += 1
            event = {"seq": session.seq, "ts": time.time(), "type": type_, "payload": payload}
            session.events.append(event)
            subscribers = list(session.subscribers)
        for queue, loop in subscribers:
            def push(q=queue, ev=event):
                if q.qsize() >= STATE_QUEUE_LIMIT and ev["type"] == "state":
                    try:
                        q.get_nowait()  # drop-oldest for state frames only
                    except asyncio.QueueEmpty:
                        pass
                q.put_nowait(ev)
            loop.call_soon_threadsafe(push)

    def state_payload(session: Session) -> dict:
        model = session.model
        q = session.q
        poses = fk_all(model, q)
        tool = poses[model.link_index(model.tool_frame)]
        lo, hi = model.position_limits()
        q_a = q[: model.n_a]
        frames = []
        for joint in model.joints:
            if joint.kind != "revolute":
                continue
            T = poses[model.link_index(joint.child_link)]
            frames.append({
                "joint": joint.name,
                "xyz": [float(v) for v in T[:3, 3]],
                "quat_wxyz": [float(v) for v in rotation_to_quat(T[:3, :3])],
                "parent_xyz": [float(v) for v in poses[model.link_index(joint.parent_link)][:3, 3]],
            })
        tool_p = tool[:3, 3]
        return {
            "q_a": [float(v) for v in q_a],
            "q_full": [float(v) for v in q],
            "tool_xyz": [float(v) for v in tool_p],
            "tool_quat_wxyz": [float(v) for v in rotation_to_quat(tool[:3, :3])],
            "at_limit": [bool(q_a[i] <= lo[i] + 1e-9 or q_a[i] >= hi[i] - 1e-9)
                         for i in range(model.n_a)],
            "frames": frames,
            "results_valid": session.results_valid,
            "last_run_id": session.last_run_id,
        }

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    # -- endpoints ----------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: dict):
        kind = body.get("robot_kind", "cr4")
        try:
            scenario = _scenario_from_document(body.get("scenario", {}))
            model = build_robot(kind, scenario.scale, scenario.scaling_law)
            if scenario.payload is not None:
                from .model import attach_payload

                model = attach_payload(model, scenario.payload)
        except (ModelError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        q = zero_configuration(model)
        if model.closures:
            q = solve_closure(model, q[: model.n_a])
        with registry_lock:
            sid = f"s{next(session_counter)}"
        session = Session(id=sid, kind=kind, model=model, scenario=scenario, q=q)
        sessions[sid] = session
        emit(session, "session_created", {"session_id": sid, "robot_kind": kind,
                                          "n_a": model.n_a, "reach_m": reach(model)})
        return {"session_id": sid, "n_a": model.n_a, "reach_m": reach(model)}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = get_session(session_id)
        return state_payload(session)

    @app.post("/sessions/{session_id}/jog")
    def jog(session_id: str, body: dict):
        session = get_session(session_id)
        model = session.model
        mode = body.get("mode")
        rate = body.get("rate_limit_hz")
        if rate is not None and float(rate) > MAX_JOG_RATE_HZ:
            raise HTTPException(status_code=422,
                                detail=f"jog rate limit is {MAX_JOG_RATE_HZ} Hz")
        with session.lock:
            q_old = session.q.copy()
            try:
                if mode == "joint":
                    axis = int(body["axis"])
                    inc = float(body["increment_rad"])
                    if abs(inc) > MAX_JOG_JOINT + 1e-12:
                        raise HTTPException(status_code=422,
                                            detail=f"joint jog increment bounded by {MAX_JOG_JOINT} rad")
                    if not (0 <= axis < model.n_a):
                        raise HTTPException(status_code=422, detail=f"axis must be in [0, {model.n_a})")
                    q_a = session.q[: model.n_a].copy()
                    q_a[axis] += inc
                    lo, hi = model.position_limits()
                    q_a = np.clip(q_a, lo, hi)
                    if model.closures:
                        session.q = solve_closure(model, q_a, seed=session.q[model.n_a:])
                    else:
                        session.q = q_a
                elif mode == "cartesian":
                    direction = np.asarray(body["direction"], dtype=float)
                    inc = float(body["increment_m"])
                    if abs(inc) > MAX_JOG_CART + 1e-12:
                        raise HTTPException(status_code=422,
                                            detail=f"cartesian jog increment bounded by {MAX_JOG_CART} m")
                    norm = np.linalg.norm(direction)
                    if norm < 1e-12:
                        raise HTTPException(status_code=422, detail="zero jog direction")
                    if inc != 0.0:
                        target = forward_kinematics(model, session.q, model.tool_frame).copy()
                        target[:3, 3] += direction / norm * inc
                        locked = None
                        if model.closures:
                            locked = np.zeros(model.n_a, dtype=bool)
                            locked[-1] = True
                        session.q = ik_solve(model, session.q, target, position_only=True,
                                             locked=locked, tol=1e-6, max_iter=50)
                        violations = check_limits(model, session.q[: model.n_a])
                        if violations:
                            raise KinematicsError("; ".join(violations))
                else:
                    raise HTTPException(status_code=422, detail=f"unknown jog mode {mode!r}")
            except (KinematicsError, ModelError) as exc:
                session.q = q_old
                emit(session, "error", {"command": "jog", "detail": str(exc)})
                return {"ok": False, "detail": str(exc), "state": state_payload(session)}
            state = state_payload(session)
        emit(session, "state", state)
        return {"ok": True, "state": state}

    @app.put("/sessions/{session_id}/program")
    def put_program(session_id: str, body: dict):
        session = get_session(session_id)
        try:
            start_q, primitives, dt = program_from_document(body)
            if start_q.shape != (session.model.n_a,):
                raise ValueError(f"start_q must have {session.model.n_a} entries")
            if not primitives:
                raise ValueError("program has no primitives")
            if dt <= 0:
                raise ValueError("dt must be > 0")
        except (KeyError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"invalid program: {exc}")
        with session.lock:
            session.program = body
            session.results_valid = False
        emit(session, "program_updated", {"primitives": len(primitives)})
        return {"ok": True, "primitives": len(primitives)}

    def execute_run(session: Session, run: Run):
        with session.lock:  # one in-flight run per session; later runs queue here
            run.status = "running"
            run.directory = root / run.id
            run.directory.mkdir(parents=True, exist_ok=True)
            emit(session, "run_started", {"run_id": run.id})

            def sink(kind: str, name: str, text: str):
                (run.directory / name).write_text(text)
                run.artifacts[kind] = name

            # progress heartbeat at 5 Hz so clients see liveness inside long stages
            stop_heartbeat = threading.Event()

            def heartbeat():
                while not stop_heartbeat.wait(0.2):
                    emit(session, "run_progress",
                         {"run_id": run.id, "stage": run.stage, "heartbeat": True})

            beat = threading.Thread(target=heartbeat, daemon=True)
            beat.start()
            try:
                start_q, primitives, dt = program_from_document(session.program)

                def progress(stage: str):
                    run.stage = stage
                    emit(session, "run_progress", {"run_id": run.id, "stage": stage})

                run_pipeline(session.model, session.scenario, start_q, primitives,
                             dt, catalog, SizingConfig(), progress=progress,
                             artifact_sink=sink)
                run.status = "done"
                session.last_run_id = run.id
                session.results_valid = True
                emit(session, "run_complete", {"run_id": run.id,
                                               "artifacts": sorted(run.artifacts)})
            except PipelineError as exc:
                # artifacts written before the failing stage stay retrievable
                run.status = "failed"
                run.error = str(exc)
                run.stage = exc.stage
                emit(session, "run_failed", {"run_id": run.id, "stage": exc.stage,
                                             "detail": str(exc),
                                             "partial_artifacts": sorted(run.artifacts)})
            except Exception as exc:  # defensive: surface anything else as failed
                run.status = "failed"
                run.error = str(exc)
                emit(session, "run_failed", {"run_id": run.id, "stage": run.stage,
                                             "detail": str(exc),
                                             "partial_artifacts": sorted(run.artifacts)})
            finally:
                stop_heartbeat.set()
                beat.join(timeout=1.0)

    @app.post("/sessions/{session_id}/runs")
    def start_run(session_id: str):
        session = get_session(session_id)
        if session.program is None:
            raise HTTPException(status_code=422, detail="no program uploaded")
        with registry_lock:
            rid = f"r{next(run_counter)}"
        run = Run(id=rid, session_id=session_id)
        runs[rid] = run
        emit(session, "run_queued", {"run_id": rid})
        threading.Thread(target=execute_run, args=(session, run), daemon=True).start()
        return {"run_id": rid}

    @app.get("/runs/{run_id}")
    def run_status(run_id: str):
        run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return {"run_id": run.id, "session_id": run.session_id, "status": run.status,
                "stage": run.stage, "error": run.error, "partial": run.status == "failed",
                "artifacts": sorted(run.artifacts) if run.artifacts else []}

    @app.get("/runs/{run_id}/artifacts/{kind}")
    def artifact(run_id: str, kind: str):
        run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        if kind not in ARTIFACT_FILES:
            raise HTTPException(status_code=404, detail=f"unknown artifact kind {kind!r}")
        if run.status in ("queued", "running"):
            raise HTTPException(status_code=409,
                                detail=f"run {run_id} is {run.status}; try again later")
        if kind not in run.artifacts:
            # failed runs keep whatever was produced before the failing stage
            raise HTTPException(status_code=404,
                                detail=f"artifact {kind!r} not produced (run {run.status})")
        path = run.directory / ARTIFACT_FILES[kind]
        text = path.read_text()
        if path.suffix == ".json":
            return json.loads(text)
        return PlainTextResponse(text)

    @app.get("/sessions/{session_id}/results")
    def results(session_id: str):
        session = get_session(session_id)
        if not session.results_valid:
            return {"valid": False, "detail": "results invalidated by a scenario/program change",
                    "last_run_id": session.last_run_id}
        return {"valid": True, "last_run_id": session.last_run_id}

    @app.websocket("/sessions/{session_id}/events")
    async def events(ws: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()
        since = 0
        try:
            since = int(ws.query_params.get("since", 0))
        except (TypeError, ValueError):
            since = 0
        with registry_lock:
            backlog = [e for e in session.events if e["seq"] > since]
            session.subscribers.append((queue, loop))
        try:
            for event in backlog:
                await ws.send_json(event)
            while True:
                event = await queue.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            with registry_lock:
                if (queue, loop) in session.subscribers:
                    session.subscribers.remove((queue, loop))

    return app


def main(host: str = "127.0.0.1", port: int = 8077, artifact_root: str | None = None):
    import uvicorn

    uvicorn.run(create_app(artifact_root), host=host, port=port, log_level="warning")
