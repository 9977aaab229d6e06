"""FastAPI application exposing playground sessions over JSON.

Sessions live in memory behind unguessable tokens with LRU eviction.
Every response is a pure function of the session's initial state and its
click/config history; undo and config replay literally re-apply that
history from the stored initial state.
"""

from __future__ import annotations

import dataclasses
import io
import json

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image, UnidentifiedImageError

from ..adaptation import AdaptationConfig
from ..errors import InvalidBBox, OutOfBounds
from ..playground.session import (
    ClickEvent,
    PlaygroundConfig,
    apply_click,
    init_session,
    iou,
    prepare_base,
)
from .rle import encode_mask_rle
from .store import SessionEntry, SessionStore

DEFAULT_MAX_UPLOAD_SIDE = 1024
# Snappier than the engine default: clicks stay interactive because the
# read-out weights fit the cache.
DEFAULT_SERVICE_CONFIG = PlaygroundConfig(max_side=64)


class ApiError(Exception):
    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        self.message = message


def _error_response(status, code, message):
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _entry_dto(sid, entry):
    session = entry.session
    h, w = session.shape
    return {
        "session_id": sid,
        "height": h,
        "width": w,
        "click_count": len(session.clicks),
        "clicks": [
            {"row": c.row, "col": c.col, "positive": c.positive, "radius": c.radius}
            for c in session.clicks
        ],
        "config": entry.cfg.to_json_dict(),
        "mask_rle": encode_mask_rle(session.mask),
        "iou": entry.iou_history[-1] if entry.iou_history else None,
        "iou_history": list(entry.iou_history),
        "bbox": None if session.bbox is None else list(session.bbox),
    }


def _decode_upload(data, mode):
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ApiError(400, "bad_image", f"cannot decode image: {exc}") from exc
    return np.asarray(img.convert(mode))


def _merge_config(base_dict, overrides):
    """Shallow merge with one-level-deep merge of the nested sub-configs."""
    merged = dict(base_dict)
    for key, value in overrides.items():
        if key in ("feature", "adaptation") and isinstance(value, dict):
            nested = dict(merged.get(key, {}))
            nested.update(value)
            merged[key] = nested
        else:
            merged[key] = value
    return merged


def _replay(entry, clicks):
    """Rebuild the session from its initial state and re-apply clicks."""
    session = init_session(
        entry.image, entry.bbox, entry.cfg, gt=entry.gt, base=entry.base
    )
    history = []
    if entry.gt is not None:
        history.append(iou(session.mask, session.gt))
    for click in clicks:
        session = apply_click(session, click)
        if entry.gt is not None:
            history.append(iou(session.mask, session.gt))
    entry.session = session
    entry.iou_history = history


def create_app(default_config=None, capacity=64, static_dir=None,
               max_upload_side=DEFAULT_MAX_UPLOAD_SIDE):
    app = FastAPI(title="probattn playground", docs_url=None, redoc_url=None)
    store = SessionStore(capacity=capacity)
    base_config = default_config or DEFAULT_SERVICE_CONFIG

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return _error_response(422, "invalid_request", str(exc.errors()[:3]))

    def _live_entry(sid):
        entry = store.get(sid)
        if entry == "missing":
            raise ApiError(404, "unknown_session", f"no session {sid}")
        if entry == "evicted":
            raise ApiError(410, "session_evicted", f"session {sid} was evicted")
        return entry

    @app.get("/api/healthz")
    async def healthz():
        return {"status": "ok", "sessions": len(store)}

    @app.post("/api/session", status_code=201)
    def create_session(
        image: UploadFile = File(...),
        gt: UploadFile | None = File(None),
        config: str = Form("{}"),
    ):
        try:
            overrides = json.loads(config) if config else {}
        except json.JSONDecodeError as exc:
            raise ApiError(422, "invalid_config", f"config is not JSON: {exc}")
        rgb = _decode_upload(image.file.read(), "RGB")
        if max(rgb.shape[:2]) > max_upload_side:
            raise ApiError(
                413, "image_too_large",
                f"image exceeds {max_upload_side}px on a side",
            )
        gt_mask = None
        if gt is not None:
            gt_mask = _decode_upload(gt.file.read(), "L") > 127
            if gt_mask.shape != rgb.shape[:2]:
                raise ApiError(422, "bad_mask", "mask dimensions do not match")
        bbox = overrides.pop("bbox", None)
        if bbox is not None:
            bbox = tuple(int(v) for v in bbox)
        try:
            cfg = PlaygroundConfig.from_json_dict(
                _merge_config(base_config.to_json_dict(), overrides)
            )
        except (ValueError, TypeError) as exc:
            raise ApiError(422, "invalid_config", str(exc))
        try:
            base = prepare_base(rgb, cfg, gt=gt_mask)
            entry = SessionEntry(rgb, gt_mask, bbox, cfg, None, base)
            _replay(entry, [])
        except InvalidBBox as exc:
            raise ApiError(422, "invalid_bbox", str(exc))
        sid = store.put(entry)
        return _entry_dto(sid, entry)

    @app.get("/api/session/{sid}")
    def get_state(sid: str):
        entry = _live_entry(sid)
        with entry.lock:
            return _entry_dto(sid, entry)

    @app.post("/api/session/{sid}/click")
    def post_click(sid: str, payload: dict):
        entry = _live_entry(sid)
        try:
            click = ClickEvent(
                row=int(payload["row"]),
                col=int(payload["col"]),
                positive=bool(payload["positive"]),
                radius=int(payload.get("radius", entry.cfg.click_radius)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "invalid_click", f"bad click payload: {exc}")
        with entry.lock:
            try:
                entry.session = apply_click(entry.session, click)
            except OutOfBounds as exc:
                raise ApiError(422, "click_out_of_bounds", str(exc))
            if entry.gt is not None:
                entry.iou_history.append(iou(entry.session.mask, entry.session.gt))
            return _entry_dto(sid, entry)

    @app.post("/api/session/{sid}/undo")
    def undo(sid: str):
        entry = _live_entry(sid)
        with entry.lock:
            if not entry.session.clicks:
                raise ApiError(409, "nothing_to_undo", "no clicks to undo")
            _replay(entry, entry.session.clicks[:-1])
            return _entry_dto(sid, entry)

    @app.patch("/api/session/{sid}/config")
    def patch_config(sid: str, payload: dict):
        entry = _live_entry(sid)
        patch = payload.get("config", {})
        replay = bool(payload.get("replay", False))
        with entry.lock:
            merged = entry.cfg.adaptation.to_json_dict()
            merged.update(patch)
            try:
                adaptation = AdaptationConfig.from_json_dict(merged)
            except (ValueError, TypeError) as exc:
                raise ApiError(422, "invalid_config", str(exc))
            rebuild_base = (
                adaptation.key_iters,
                adaptation.theta_xi,
                adaptation.theta_alpha,
                adaptation.anchor,
            ) != (
                entry.cfg.adaptation.key_iters,
                entry.cfg.adaptation.theta_xi,
                entry.cfg.adaptation.theta_alpha,
                entry.cfg.adaptation.anchor,
            )
            entry.cfg = dataclasses.replace(entry.cfg, adaptation=adaptation)
            if replay:
                if rebuild_base:
                    entry.base = prepare_base(entry.image, entry.cfg, gt=entry.gt)
                else:
                    entry.base.cfg = entry.cfg
                _replay(entry, entry.session.clicks)
            else:
                entry.base.cfg = entry.cfg
                entry.session.base.cfg = entry.cfg
            return _entry_dto(sid, entry)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
