"""JSON API for the analyst console.

Sessions are in-memory and single-writer: mutations serialize on a per-session
lock and must cite the current revision (optimistic concurrency, 409 on a
stale token).  Reads are side-effect free and byte-stable between mutations.
Error mapping: 400 malformed input, 404 unknown ids, 409 stale revision,
422 domain-rule violations.
"""

from __future__ import annotations

import json
import threading
import uuid

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .attributes import ATTRIBUTE_DOMAINS, evaluate_attribute, what_if
from .bundle import bundle_to_dict
from .defences import Category, Control, PlacementSlot, load_catalog, placement_slots, suggest_controls
from .errors import (
    DomainRuleError,
    EvaluationError,
    ModelParseError,
    ModelValidationError,
    StadtError,
    UnknownElementError,
)
from .model import Model, load_model, model_to_doc
from .session import Session
from .synthesis import tree_to_dict


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


class SessionBox:
    """A session plus its writer lock."""

    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()


class ServiceState:
    def __init__(self):
        self.sessions: dict[str, SessionBox] = {}
        self.catalog = load_catalog()


def _http_status(exc: StadtError) -> int:
    if isinstance(exc, UnknownElementError):
        return 404
    if isinstance(exc, (DomainRuleError, EvaluationError)):
        return 422
    return 400


def create_app(initial_model: Model | None = None) -> FastAPI:
    app = FastAPI(title="stadt analyst service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    state = ServiceState()
    app.state.service = state

    if initial_model is not None:
        box = SessionBox(Session(initial_model))
        state.sessions["default"] = box

    def get_box(session_id: str) -> SessionBox:
        box = state.sessions.get(session_id)
        if box is None:
            raise ApiError(404, "unknown-session", f"unknown session {session_id!r}")
        return box

    def require_revision(box: SessionBox, body: dict) -> None:
        cited = body.get("revision")
        if cited is None:
            raise ApiError(400, "missing-revision", "mutations must cite the current revision")
        if cited != box.session.revision:
            raise ApiError(
                409,
                "stale-revision",
                f"revision {cited} is stale (current {box.session.revision})",
            )

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(StadtError)
    async def handle_domain_error(request: Request, exc: StadtError):
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def summary(session: Session) -> dict:
        return {
            "elements": len(session.model.elements),
            "edges": len(session.model.edges),
            "policies": len(session.model.policies),
            "perimeters": len(session.model.perimeters),
            "controls": len(session.controls),
            "attachments": len(session.attachments),
            "revision": session.revision,
        }

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(body: dict):
        if "model" not in body:
            raise ApiError(400, "missing-model", "body needs a 'model' document")
        model_doc = body["model"]
        try:
            model = load_model(json.dumps(model_doc) if isinstance(model_doc, dict) else model_doc)
        except (ModelParseError, ModelValidationError) as exc:
            raise ApiError(400, exc.code, exc.message)
        controls = [Control.from_dict(raw) for raw in body.get("controls", [])]
        session = Session.load(model, controls=controls, records=body.get("attachments", []))
        session_id = body.get("id") or uuid.uuid4().hex[:12]
        if session_id in state.sessions:
            raise ApiError(422, "duplicate-session", f"session {session_id!r} exists")
        state.sessions[session_id] = SessionBox(session)
        return {"sessionId": session_id, "summary": summary(session), "revision": session.revision}

    @app.get("/api/v1/sessions/{session_id}")
    async def get_summary(session_id: str):
        return summary(get_box(session_id).session)

    @app.get("/api/v1/sessions/{session_id}/model")
    async def get_model(session_id: str):
        return model_to_doc(get_box(session_id).session.model)

    @app.get("/api/v1/sessions/{session_id}/bundles")
    async def list_bundles(session_id: str):
        session = get_box(session_id).session
        return {"assets": sorted(session.model.elements)}

    @app.get("/api/v1/sessions/{session_id}/bundles/{asset}")
    async def get_bundle(session_id: str, asset: str):
        session = get_box(session_id).session
        bundle = session.bundle(asset)
        payload = bundle_to_dict(bundle)
        element = session.model.elements.get(asset)
        if element is not None and element.kind.value == "location":
            payload["perimeterControls"] = session.perimeter_references(asset)
        payload["revision"] = session.revision
        return payload

    @app.get("/api/v1/sessions/{session_id}/slots/{asset}")
    async def get_slots(session_id: str, asset: str):
        session = get_box(session_id).session
        session.model.element(asset)
        return {"slots": [slot.key() for slot in placement_slots(session.bundle(asset))]}

    @app.get("/api/v1/sessions/{session_id}/controls")
    async def list_controls(session_id: str):
        session = get_box(session_id).session
        return {
            "controls": [c.to_dict() for _, c in sorted(session.controls.items())],
            "attachments": session.attachment_records(),
            "revision": session.revision,
        }

    @app.get("/api/v1/sessions/{session_id}/controls/suggest")
    async def suggest(session_id: str, element: str, category: str):
        session = get_box(session_id).session
        try:
            cat = Category(category)
        except ValueError:
            raise ApiError(400, "bad-category", f"unknown category {category!r}")
        return {"names": suggest_controls(session.model, element, cat, catalog=state.catalog)}

    @app.post("/api/v1/sessions/{session_id}/controls")
    async def register_control(session_id: str, body: dict):
        box = get_box(session_id)
        with box.lock:
            require_revision(box, body)
            try:
                control = Control.from_dict(body["control"])
            except (KeyError, ValueError) as exc:
                raise ApiError(400, "bad-control", f"malformed control: {exc}")
            box.session.register_control(control)
            return {"revision": box.session.revision}

    @app.post("/api/v1/sessions/{session_id}/attachments")
    async def attach(session_id: str, body: dict):
        box = get_box(session_id)
        with box.lock:
            require_revision(box, body)
            slot = PlacementSlot.parse(body["slot"])
            attachment = box.session.attach(body["controlId"], slot)
            return {"attachment": attachment.to_dict(), "revision": box.session.revision}

    @app.delete("/api/v1/sessions/{session_id}/attachments/{control_id}")
    async def detach(session_id: str, control_id: str, body: dict):
        box = get_box(session_id)
        with box.lock:
            require_revision(box, body)
            attachment = box.session.detach(control_id)
            return {"detached": attachment.to_dict(), "revision": box.session.revision}

    @app.post("/api/v1/sessions/{session_id}/synthesize")
    async def synthesize_tree(session_id: str, body: dict):
        session = get_box(session_id).session
        result = session.evaluate(body["attacker"], body["asset"])
        payload = tree_to_dict(result.tree, values=result.values, trace=result.trace)
        payload["rootValue"] = result.value
        payload["revision"] = session.revision
        return payload

    @app.post("/api/v1/sessions/{session_id}/evaluate")
    async def evaluate(session_id: str, body: dict):
        session = get_box(session_id).session
        attribute = body["attribute"]
        domain = ATTRIBUTE_DOMAINS.get(attribute)
        if domain is None:
            raise ApiError(400, "bad-attribute", f"unknown attribute {attribute!r}")
        result = session.evaluate(body["attacker"], body["asset"])
        values = evaluate_attribute(
            result.tree,
            domain,
            body.get("leaves", {}),
            controls=session.controls,
            props=result.values,
        )
        by_term = {
            node.term.key(): _wire_number(values[node.id])
            for node in result.tree.root.walk()
        }
        return {
            "attribute": attribute,
            "root": _wire_number(values[result.tree.root.id]),
            "values": by_term,
            "revision": session.revision,
        }

    @app.post("/api/v1/sessions/{session_id}/what-if")
    async def what_if_endpoint(session_id: str, body: dict):
        box = get_box(session_id)
        with box.lock:
            require_revision(box, body)
            action = body.get("action", {})
            slot = PlacementSlot.parse(action["slot"]) if "slot" in action else None
            result = what_if(
                box.session,
                action.get("type", ""),
                action.get("controlId", ""),
                body["attribute"],
                body["attacker"],
                body["asset"],
                leaves=body.get("leaves"),
                slot=slot,
            )
            if body.get("rollback"):
                result.rollback()
            return {
                "attribute": result.attribute,
                "before": _wire_number(result.before),
                "after": _wire_number(result.after),
                "revision": box.session.revision,
            }

    return app


def _wire_number(value: float):
    if value == float("inf"):
        return "inf"
    if value == float("-inf"):
        return "-inf"
    return value
