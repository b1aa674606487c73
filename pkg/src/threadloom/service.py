"""Local HTTP interface over the engine, with a versioned message schema.

The service is a thin adapter: every behavior it exposes exists (and is
tested) at the engine level. Requests and responses travel in a small JSON
envelope:

    request:  {"version": 1, "request_id": "...", "expected_revision": N,
               "payload": {...}}
    response: {"version": 1, "request_id": "...", "revision": N,
               "payload": {...}}
    error:    {"version": 1, "request_id": "...",
               "error": {"code": "...", "message": "..."}}

Every mutation must carry ``expected_revision``; a stale value is rejected
with 409 and the workspace is left untouched. Schema violations return 422.
Binds localhost by default; this is a single-user tool with no auth in v1.
"""

from __future__ import annotations

import base64
import json
import logging
import re
import urllib.parse
from socketserver import ThreadingMixIn
from typing import Callable
from wsgiref.simple_server import WSGIRequestHandler, WSGIServer, make_server

from .docmodel import PageRect
from .engine import DEFAULT_BIND, DEFAULT_PORT, Engine
from .errors import SchemaError, ThreadloomError
from .highlights import HighlightKind, ViewportTransform

logger = logging.getLogger(__name__)

API_VERSION = 1

_ROUTES: list[tuple[str, re.Pattern, str, bool]] = []


def _route(method: str, pattern: str, mutation: bool = False):
    compiled = re.compile(f"^{pattern}$")

    def register(fn: Callable) -> Callable:
        _ROUTES.append((method, compiled, fn.__name__, mutation))
        return fn

    return register


class ApiService:
    """WSGI application; mutations serialize through the engine's store lock."""

    def __init__(self, engine: Engine):
        self.engine = engine

    # -- WSGI plumbing --

    def __call__(self, environ, start_response):
        method = environ["REQUEST_METHOD"]
        path = environ.get("PATH_INFO", "/")
        request_id = None
        try:
            body = self._read_body(environ)
            envelope = self._parse_envelope(body)
            envelope["query"] = {
                k: v[-1] for k, v in urllib.parse.parse_qs(environ.get("QUERY_STRING", "")).items()
            }
            request_id = envelope.get("request_id")
            for route_method, pattern, handler_name, mutation in _ROUTES:
                if route_method != method:
                    continue
                match = pattern.match(path)
                if match is None:
                    continue
                if mutation and envelope.get("expected_revision") is None:
                    raise SchemaError("expected_revision", "mutations require expected_revision")
                handler = getattr(self, handler_name)
                payload = handler(envelope, **match.groupdict())
                return self._respond(start_response, 200, request_id, payload=payload)
            return self._respond(
                start_response, 404, request_id, error={"code": "NOT_FOUND", "message": f"no route {method} {path}"}
            )
        except ThreadloomError as exc:
            return self._respond(
                start_response, exc.http_status, request_id, error={"code": exc.code, "message": exc.message}
            )
        except (ValueError, KeyError, TypeError) as exc:
            return self._respond(
                start_response, 422, request_id, error={"code": "SCHEMA", "message": str(exc) or repr(exc)}
            )

    def _read_body(self, environ) -> bytes:
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        if length <= 0:
            return b""
        return environ["wsgi.input"].read(length)

    def _parse_envelope(self, body: bytes) -> dict:
        if not body:
            return {}
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"request body is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise SchemaError("$", "request body must be an object")
        return data

    def _respond(self, start_response, status: int, request_id, payload=None, error=None):
        body: dict = {"version": API_VERSION, "request_id": request_id}
        if error is not None:
            body["error"] = error
        else:
            body["revision"] = self.engine.workspace.revision
            body["payload"] = payload
        raw = json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")
        reason = {200: "OK", 404: "Not Found", 409: "Conflict", 413: "Payload Too Large", 422: "Unprocessable Entity", 429: "Too Many Requests", 500: "Internal Server Error", 502: "Bad Gateway"}.get(status, "Error")
        start_response(
            f"{status} {reason}",
            [("Content-Type", "application/json; charset=utf-8"), ("Content-Length", str(len(raw)))],
        )
        return [raw]

    @staticmethod
    def _payload(envelope: dict) -> dict:
        payload = envelope.get("payload")
        if not isinstance(payload, dict):
            raise SchemaError("payload", "missing payload object")
        return payload

    # -- read endpoints --

    @_route("GET", r"/workspace")
    def get_workspace(self, envelope: dict) -> dict:
        return self.engine.workspace_info()

    @_route("GET", r"/threads")
    def get_threads(self, envelope: dict) -> dict:
        return {"drawer": self.engine.drawer()}

    @_route("GET", r"/tank")
    def get_tank(self, envelope: dict) -> dict:
        return {"tank": self.engine.tank_state()}

    @_route("GET", r"/threads/(?P<thread_id>[^/]+)/overview")
    def get_overview(self, envelope: dict, thread_id: str) -> dict:
        return {"overview": self.engine.overview(thread_id)}

    @_route("GET", r"/threads/(?P<thread_id>[^/]+)/outline")
    def get_outline(self, envelope: dict, thread_id: str) -> dict:
        return {"outline": self.engine.export_outline(thread_id)}

    # -- mutations --

    @_route("POST", r"/documents", mutation=True)
    def post_documents(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        expected = envelope["expected_revision"]
        if "tei" in payload:
            return self.engine.ingest(str(payload["tei"]).encode("utf-8"), tei=True, expected_revision=expected)
        parse = payload.get("parse")
        if parse is None:
            raise SchemaError("payload.parse", "missing parse payload")
        raw = json.dumps(parse).encode("utf-8") if isinstance(parse, dict) else str(parse).encode("utf-8")
        return self.engine.ingest(raw, expected_revision=expected)

    @_route("POST", r"/highlights", mutation=True)
    def post_highlights(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        doc_id = payload["doc_id"]
        kind = HighlightKind(payload.get("kind", "TEXT"))
        rects = [
            PageRect(page=int(r["page"]), x=float(r["x"]), y=float(r["y"]), w=float(r["w"]), h=float(r["h"]))
            for r in payload.get("rects", [])
        ]
        if not rects:
            raise SchemaError("payload.rects", "at least one rectangle required")
        transform = None
        if payload.get("transform"):
            t = payload["transform"]
            transform = ViewportTransform(
                render_scale=float(t["render_scale"]),
                page_offsets={int(p): (float(xy[0]), float(xy[1])) for p, xy in t.get("page_offsets", {}).items()},
            )
        image_bytes = None
        if payload.get("image_base64"):
            image_bytes = base64.b64decode(payload["image_base64"])
        return self.engine.highlight(
            doc_id,
            rects,
            kind=kind,
            transform=transform,
            image_bytes=image_bytes,
            expected_revision=envelope["expected_revision"],
        )

    @_route("POST", r"/tank/select", mutation=True)
    def post_tank_select(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        return self.engine.tank_select(
            int(payload["index"]), bool(payload["selected"]), expected_revision=envelope["expected_revision"]
        )

    @_route("POST", r"/tank/commit", mutation=True)
    def post_tank_commit(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        return self.engine.tank_commit(
            str(payload["mode"]),
            target=payload.get("target"),
            label=payload.get("label"),
            expected_revision=envelope["expected_revision"],
        )

    @_route("POST", r"/threads", mutation=True)
    def post_threads(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        return self.engine.create_thread(
            str(payload["label"]), parent=payload.get("parent"), expected_revision=envelope["expected_revision"]
        )

    @_route("PATCH", r"/threads/(?P<thread_id>[^/]+)", mutation=True)
    def patch_thread(self, envelope: dict, thread_id: str) -> dict:
        payload = self._payload(envelope)
        return self.engine.rename_thread(thread_id, str(payload["label"]), expected_revision=envelope["expected_revision"])

    @_route("DELETE", r"/threads/(?P<thread_id>[^/]+)", mutation=True)
    def delete_thread(self, envelope: dict, thread_id: str) -> dict:
        payload = envelope.get("payload") or {}
        return self.engine.delete_thread(
            thread_id, confirm=bool(payload.get("confirm")), expected_revision=envelope["expected_revision"]
        )

    @_route("POST", r"/threads/(?P<thread_id>[^/]+)/move", mutation=True)
    def post_thread_move(self, envelope: dict, thread_id: str) -> dict:
        payload = self._payload(envelope)
        position = payload.get("position")
        return self.engine.move_thread(
            thread_id,
            payload.get("parent"),
            position=int(position) if position is not None else None,
            expected_revision=envelope["expected_revision"],
        )

    @_route("POST", r"/papers/move", mutation=True)
    def post_paper_move(self, envelope: dict) -> dict:
        payload = self._payload(envelope)
        return self.engine.move_paper(
            str(payload["src"]), str(payload["paper"]), str(payload["dst"]),
            expected_revision=envelope["expected_revision"],
        )

    @_route("PATCH", r"/clips/(?P<clip_id>[^/]+)", mutation=True)
    def patch_clip(self, envelope: dict, clip_id: str) -> dict:
        payload = self._payload(envelope)
        return self.engine.edit_clip(clip_id, str(payload["text"]), expected_revision=envelope["expected_revision"])

    # -- recommendations (recompute; not a workspace mutation) --

    @_route("POST", r"/threads/(?P<thread_id>[^/]+)/recommendations/refresh")
    def post_recommendations_refresh(self, envelope: dict, thread_id: str) -> dict:
        return self.engine.recommend(thread_id, refresh=True)

    @_route("GET", r"/threads/(?P<thread_id>[^/]+)/recommendations")
    def get_recommendations(self, envelope: dict, thread_id: str) -> dict:
        return self.engine.recommend(thread_id, refresh=False)

    @_route("GET", r"/suggest")
    def get_suggest(self, envelope: dict) -> dict:
        query = envelope.get("query", {})
        text = query.get("text", "")
        k = int(query["k"]) if query.get("k") else None
        return {"suggestions": self.engine.suggest(text, k=k)}


class _ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True


class _QuietHandler(WSGIRequestHandler):
    def log_message(self, format, *args):  # noqa: A002 (stdlib signature)
        logger.debug("%s - %s", self.address_string(), format % args)


def make_service_server(engine: Engine, bind: str | None = None, port: int | None = None):
    service_cfg = engine.config.service
    bind = bind if bind is not None else service_cfg.get("bind", DEFAULT_BIND)
    port = port if port is not None else int(service_cfg.get("port", DEFAULT_PORT))
    app = ApiService(engine)
    server = make_server(bind, port, app, server_class=_ThreadingWSGIServer, handler_class=_QuietHandler)
    return server


def serve(engine: Engine, bind: str | None = None, port: int | None = None) -> None:
    server = make_service_server(engine, bind, port)
    host, actual_port = server.server_address[:2]
    logger.info("serving on http://%s:%s", host, actual_port)
    print(f"threadloom service listening on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
