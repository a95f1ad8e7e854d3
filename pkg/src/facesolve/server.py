"""HTTP session service for human-in-the-loop solving.

One session = one shot. Mutations go through POST /sessions/{id}/actions with
an optimistic-concurrency revision echo; reads are snapshot-consistent.
Errors are returned as {"code", "message", "path"}.
"""

from __future__ import annotations

import threading
import uuid
from typing import Any, Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import FaceSolveError, ParseError, ValidationError
from .optimize import FinetuneSpec, finetune
from .pipeline import AnchorPose, SolveReport, SolverBundle, align_with_anchor, rmse, solve_jaw, solve_raw
from .rig import Rig, load_rig
from .tracks import MarkerTrack, WeightTrack

__all__ = ["create_app", "SessionStore"]


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, path: str = "$"):
        self.status, self.code, self.message, self.path = status, code, message, path


class CreateSessionRequest(BaseModel):
    rig: dict
    bundle: dict
    track: dict


class ActionBody(BaseModel):
    revision: int
    action: dict


class CreateSessionResponse(BaseModel):
    id: str
    revision: int


class ActionResponse(BaseModel):
    revision: int
    delta: dict


class Session:
    """Mutable per-shot state; all mutations run under the session lock."""

    def __init__(self, rig: Rig, bundle: SolverBundle, track: MarkerTrack):
        self.id = uuid.uuid4().hex
        self.rig = rig
        self.bundle = bundle
        self.track = track
        self.lock = threading.Lock()
        self.revision = 0
        self.anchors: list[AnchorPose] = []
        self.jaw_override: WeightTrack | None = None
        self.aligned: MarkerTrack | None = None
        self.current: WeightTrack | None = None  # raw solve + artist edits
        self.finetuned: WeightTrack | None = None
        self.rmse_raw: np.ndarray | None = None
        self.rmse_aligned: np.ndarray | None = None
        self.rmse_finetuned: np.ndarray | None = None
        self.report_stale = False

    # --- actions -----------------------------------------------------

    def set_anchor(self, frame: int, weights, position: int | None = None) -> dict:
        if not 0 <= frame < self.track.n_frames:
            raise ApiError(422, "validation", f"anchor frame {frame} out of range", "$.action.frame")
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (self.rig.n_channels,):
            raise ApiError(422, "validation", "anchor weights have wrong dimension", "$.action.weights")
        anchor = AnchorPose(frame, w)
        if position is None or position >= len(self.anchors):
            self.anchors.append(anchor)
        else:
            self.anchors.insert(max(position, 0), anchor)
        self.report_stale = True
        return {"anchors": len(self.anchors)}

    def remove_anchor(self, index: int) -> dict:
        if not 0 <= index < len(self.anchors):
            raise ApiError(422, "validation", f"no anchor at index {index}", "$.action.index")
        self.anchors.pop(index)
        self.report_stale = True
        return {"anchors": len(self.anchors)}

    def set_jaw_override(self, track_doc: dict | None) -> dict:
        if track_doc is None:
            self.jaw_override = None
        else:
            track = WeightTrack.from_document(track_doc)
            if track.n_frames != self.track.n_frames:
                raise ApiError(422, "validation", "jaw override length differs from shot", "$.action.track")
            if track.n_channels != len(self.bundle.jaw_channels):
                raise ApiError(422, "validation", "jaw override channel count mismatch", "$.action.track")
            self.jaw_override = track
        self.report_stale = True
        return {"jaw_override": self.jaw_override is not None}

    def edit_weight(self, frame: int, channel, value: float) -> dict:
        if self.current is None:
            raise ApiError(422, "validation", "no solved weights to edit; run_raw_solve first", "$.action")
        if isinstance(channel, str):
            try:
                channel = self.rig.channel_index(channel)
            except KeyError:
                raise ApiError(422, "validation", f"unknown channel '{channel}'", "$.action.channel")
        if not 0 <= frame < self.current.n_frames:
            raise ApiError(422, "validation", f"frame {frame} out of range", "$.action.frame")
        if not 0 <= channel < self.rig.n_channels:
            raise ApiError(422, "validation", f"channel {channel} out of range", "$.action.channel")
        self.current.frames[frame, channel] = float(np.clip(value, 0.0, 1.0))
        # downstream stages (finetune, rmse) must be recomputed
        self.finetuned = None
        self.rmse_finetuned = None
        self.rmse_raw = None
        self.rmse_aligned = None
        self.report_stale = True
        return {"frame": frame, "channel": channel}

    def run_raw_solve(self) -> dict:
        aligned = self.track
        for i, anchor in enumerate(self.anchors):
            aligned = align_with_anchor(aligned, anchor, self.rig, is_first=(i == 0))
        jaw = self.jaw_override if self.jaw_override is not None else solve_jaw(self.bundle, aligned)
        raw = solve_raw(self.bundle, aligned, jaw)
        self.aligned = aligned
        self.current = raw
        self.finetuned = None
        self.rmse_finetuned = None
        self.rmse_raw = rmse(self.rig, raw, self.track)
        self.rmse_aligned = rmse(self.rig, raw, aligned)
        self.report_stale = False
        return {"frames": raw.n_frames, "mean_rmse_aligned": float(self.rmse_aligned.mean())}

    def run_finetune(self, payload: dict) -> dict:
        if self.current is None or self.aligned is None:
            raise ApiError(422, "validation", "run_raw_solve before run_finetune", "$.action")
        channels = payload.get("channels")
        if not channels:
            raise ApiError(422, "validation", "channel selection required", "$.action.channels")
        subset = []
        for c in channels:
            if isinstance(c, str):
                try:
                    subset.append(self.rig.channel_index(c))
                except KeyError:
                    raise ApiError(422, "validation", f"unknown channel '{c}'", "$.action.channels")
            else:
                subset.append(int(c))
        frame_range = payload.get("frame_range") or [0, self.track.n_frames - 1]
        try:
            spec = FinetuneSpec(
                channel_subset=subset,
                frame_range=(int(frame_range[0]), int(frame_range[1])),
                marker_subset=payload.get("markers"),
                max_iters=int(payload.get("max_iters", 50)),
            )
            self.finetuned = finetune(self.rig, self.aligned, self.current, spec)
        except ValidationError as exc:
            raise ApiError(422, "validation", str(exc), "$.action")
        self.rmse_finetuned = rmse(self.rig, self.finetuned, self.aligned)
        changed = sorted(
            set(np.nonzero(np.any(self.finetuned.frames != self.current.frames, axis=0))[0].tolist())
        )
        return {
            "changed_channels": changed,
            "mean_rmse_finetuned": float(self.rmse_finetuned.mean()),
        }

    def reset(self) -> dict:
        self.anchors = []
        self.jaw_override = None
        self.aligned = None
        self.current = None
        self.finetuned = None
        self.rmse_raw = self.rmse_aligned = self.rmse_finetuned = None
        self.report_stale = False
        return {}

    # --- reads -------------------------------------------------------

    def state(self) -> dict:
        doc: dict[str, Any] = {
            "id": self.id,
            "revision": self.revision,
            "n_frames": self.track.n_frames,
            "n_markers": self.track.n_markers,
            "channels": self.rig.channel_names,
            "regions": {
                name: {"channels": rm.channel_indices, "markers": rm.marker_indices}
                for name, rm in self.bundle.regions.items()
            },
            "anchors": [
                {"frame": a.frame, "weights": a.weights.tolist()} for a in self.anchors
            ],
            "jaw_override": self.jaw_override is not None,
            "report_stale": self.report_stale,
        }
        if self.current is not None and self.rmse_aligned is not None:
            doc["report"] = self._report_summary()
        return doc

    def _report_summary(self) -> dict:
        summary = {
            "raw": {
                "mean_rmse": float(self.rmse_aligned.mean()),
                "rmse": self.rmse_aligned.tolist(),
                "rmse_unaligned": self.rmse_raw.tolist(),
            }
        }
        if self.finetuned is not None:
            summary["finetuned"] = {
                "mean_rmse": float(self.rmse_finetuned.mean()),
                "rmse": self.rmse_finetuned.tolist(),
            }
        return summary

    def report_document(self) -> dict:
        if self.current is None or self.aligned is None:
            raise ApiError(404, "not_found", "no report yet; run_raw_solve first", "$")
        report = SolveReport(
            raw=self.current, aligned=self.aligned, finetuned=self.finetuned,
            rmse_raw=self.rmse_raw, rmse_aligned=self.rmse_aligned,
            rmse_finetuned=self.rmse_finetuned,
        )
        doc = report.to_document()
        doc["revision"] = self.revision
        doc["stale"] = self.report_stale
        return doc


_ACTIONS = {
    "set_anchor", "remove_anchor", "set_jaw_override", "edit_weight",
    "run_raw_solve", "run_finetune", "reset",
}


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, rig: Rig, bundle: SolverBundle, track: MarkerTrack) -> Session:
        session = Session(rig, bundle, track)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "not_found", f"unknown session '{session_id}'", "$.id")
        return session


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="facesolve session server")
    store = store or SessionStore()
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "path": exc.path},
        )

    @app.exception_handler(FaceSolveError)
    async def _domain_error(_req: Request, exc: FaceSolveError):
        return JSONResponse(
            status_code=422,
            content={"code": "validation", "message": str(exc), "path": "$"},
        )

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(body: CreateSessionRequest):
        try:
            rig = load_rig(body.rig)
            bundle = SolverBundle.from_document(body.bundle, rig)
            track = MarkerTrack.from_document(body.track)
        except (ParseError, ValidationError) as exc:
            raise ApiError(422, "validation", str(exc), "$")
        if track.n_markers != rig.n_markers:
            raise ApiError(
                422, "validation",
                f"track has {track.n_markers} markers, rig has {rig.n_markers}", "$.track",
            )
        session = store.create(rig, bundle, track)
        return {"id": session.id, "revision": 0}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.state()

    @app.post("/sessions/{session_id}/actions", response_model=ActionResponse)
    def apply_action(session_id: str, body: ActionBody):
        session = store.get(session_id)
        action = dict(body.action)
        kind = action.pop("type", None)
        if kind not in _ACTIONS:
            raise ApiError(422, "validation", f"unknown action type '{kind}'", "$.action.type")
        with session.lock:
            if body.revision != session.revision:
                raise ApiError(
                    409, "conflict",
                    f"revision {body.revision} is stale (current {session.revision})",
                    "$.revision",
                )
            if kind == "set_anchor":
                delta = session.set_anchor(
                    int(action["frame"]), action["weights"], action.get("position")
                )
            elif kind == "remove_anchor":
                delta = session.remove_anchor(int(action["index"]))
            elif kind == "set_jaw_override":
                delta = session.set_jaw_override(action.get("track"))
            elif kind == "edit_weight":
                delta = session.edit_weight(
                    int(action["frame"]), action["channel"], float(action["value"])
                )
            elif kind == "run_raw_solve":
                delta = session.run_raw_solve()
            elif kind == "run_finetune":
                delta = session.run_finetune(action)
            else:
                delta = session.reset()
            session.revision += 1
            return {"revision": session.revision, "delta": {"type": kind, **delta}}

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.report_document()

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, what: Literal["weights", "markers"] = "weights"):
        session = store.get(session_id)
        with session.lock:
            if what == "markers":
                track = session.aligned if session.aligned is not None else session.track
                return track.to_document()
            weights = session.finetuned if session.finetuned is not None else session.current
            if weights is None:
                raise ApiError(404, "not_found", "no solved weights to export", "$")
            return weights.to_document()

    return app
