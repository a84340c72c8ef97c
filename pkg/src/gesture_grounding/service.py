"""Stateless JSON-over-HTTP grounding endpoints.

``POST /v1/resolve``  {scene | scene_ref, hand, target, mode} -> {"referent": ...}
``POST /v1/plan``     {instruction: {speech, gesture, fidelity}} -> {"program", "valid", "violations", "digest"}

Errors come back as ``{"error": {"code", "message"}}`` with the module's error code.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable

from .errors import BackendTimeout, BackendUnreachable, GroundingError, InvariantViolation, NoCandidates, TranscriptMiss
from .gesture.handfile import hand_from_dict
from .gesture.keypoints import Description, GestureClass, HandKeypoints, Label
from .planner.backends import complete
from .planner.catalog import BASE_CATALOG, Catalog
from .planner.dsl import parse_policy, validate_policy
from .planner.instruction import Instruction, describe, textualize_instruction
from .planner.prompt import PromptContext, assemble_prompt, load_context
from .referent import resolve
from .scene import Ontology, Scene, default_ontology, load_scene, scene_from_dict

MAX_BODY = 8 * 1024 * 1024

_STATUS = {
    NoCandidates: HTTPStatus.NOT_FOUND,
    TranscriptMiss: HTTPStatus.NOT_FOUND,
    BackendTimeout: HTTPStatus.GATEWAY_TIMEOUT,
    BackendUnreachable: HTTPStatus.BAD_GATEWAY,
}


class RequestError(GroundingError):
    code = "BAD_REQUEST"


@dataclass(frozen=True)
class ServiceConfig:
    backend: object
    ontology: Ontology = field(default_factory=default_ontology)
    context: PromptContext = field(default_factory=load_context)
    catalog: Catalog = BASE_CATALOG
    scenes_dir: Path | None = None


class GroundingService:
    """Request handling, independent of the HTTP layer. Holds only read-only state."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._scenes: dict[str, Scene] = {}
        self._lock = threading.Lock()
        self.routes: dict[str, Callable[[dict], dict]] = {"/v1/resolve": self.resolve, "/v1/plan": self.plan}

    def _scene(self, body: dict) -> Scene:
        if "scene" in body:
            return scene_from_dict(body["scene"])
        ref = body.get("scene_ref")
        if not isinstance(ref, str) or self.config.scenes_dir is None:
            raise RequestError("give an inline 'scene' or a 'scene_ref' known to the server")
        name = Path(ref).name
        with self._lock:
            if name not in self._scenes:
                path = self.config.scenes_dir / name
                if not path.is_file():
                    raise RequestError(f"unknown scene_ref {ref!r}")
                self._scenes[name] = load_scene(path)
            return self._scenes[name]

    @staticmethod
    def _hand(body: dict) -> HandKeypoints:
        h = body.get("hand")
        if isinstance(h, dict) and "frames" in h:
            frames = hand_from_dict(h)
            return frames[(len(frames) - 1) // 2]
        if isinstance(h, dict):
            try:
                return HandKeypoints.from_dict(h)
            except (KeyError, TypeError, ValueError) as e:
                raise InvariantViolation("hand", str(e)) from None
        raise RequestError("missing 'hand'")

    def resolve(self, body: dict) -> dict:
        mode = body.get("mode", "object")
        if mode not in ("object", "location", "direction"):
            raise RequestError(f"mode must be object, location or direction, not {mode!r}")
        hand = self._hand(body)
        if mode == "direction":
            scene = None
        else:
            scene = self._scene(body)
        target = body.get("target")
        if mode == "object" and not isinstance(target, str):
            raise RequestError("object mode needs a string 'target'")
        return {"referent": resolve(scene, hand, mode, target, self.config.ontology).to_dict()}

    def plan(self, body: dict) -> dict:
        ins = body.get("instruction")
        if not isinstance(ins, dict) or not isinstance(ins.get("speech", ""), str):
            raise RequestError("missing 'instruction' object")
        g = ins.get("gesture")
        fidelity = ins.get("fidelity", "label")
        rep = None
        if g:
            if fidelity == "label":
                rep = Label(str(g))
            elif fidelity == "description":
                try:
                    rep = Description(describe(GestureClass.parse(str(g))))
                except ValueError:
                    rep = Description(str(g))
            else:
                raise RequestError("fidelity must be label or description")
        block = textualize_instruction(Instruction(ins.get("speech", ""), (), rep), int(ins.get("index", 0)))
        prompt = assemble_prompt(self.config.context.with_catalog(self.config.catalog), block,
                                 situation=ins.get("context"))
        text = complete(self.config.backend, prompt)
        try:
            violations = [{"line": v.line, "code": v.code, "message": v.message}
                          for v in validate_policy(parse_policy(text), self.config.catalog)]
        except GroundingError as e:
            violations = [{"line": getattr(e, "line", None), "code": e.code, "message": str(e)}]
        return {"program": text, "valid": not violations, "violations": violations, "digest": prompt.digest}

    def handle(self, path: str, raw: bytes) -> tuple[int, dict]:
        route = self.routes.get(path)
        if route is None:
            return HTTPStatus.NOT_FOUND, {"error": {"code": "NOT_FOUND", "message": f"no endpoint {path}"}}
        try:
            body = json.loads(raw.decode("utf-8") or "{}")
            if not isinstance(body, dict):
                raise RequestError("request body must be a JSON object")
            return HTTPStatus.OK, route(body)
        except json.JSONDecodeError as e:
            return HTTPStatus.BAD_REQUEST, {"error": {"code": "PARSE_ERROR", "message": str(e)}}
        except GroundingError as e:
            status = next((s for cls, s in _STATUS.items() if isinstance(e, cls)), HTTPStatus.UNPROCESSABLE_ENTITY)
            if isinstance(e, RequestError):
                status = HTTPStatus.BAD_REQUEST
            return status, {"error": {"code": e.code, "message": str(e)}}
        except (ValueError, TypeError, KeyError) as e:
            return HTTPStatus.BAD_REQUEST, {"error": {"code": "BAD_REQUEST", "message": str(e)}}


def make_server(service: GroundingService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _reply(self, status: int, payload: dict) -> None:
            data = (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_POST(self):  # noqa: N802 (http.server naming)
            n = int(self.headers.get("Content-Length") or 0)
            if n > MAX_BODY:
                self._reply(HTTPStatus.REQUEST_ENTITY_TOO_LARGE,
                            {"error": {"code": "TOO_LARGE", "message": "request body too large"}})
                return
            self._reply(*service.handle(self.path, self.rfile.read(n)))

        def do_GET(self):  # noqa: N802
            if self.path == "/v1/health":
                self._reply(HTTPStatus.OK, {"status": "ok"})
            else:
                self._reply(HTTPStatus.METHOD_NOT_ALLOWED,
                            {"error": {"code": "METHOD_NOT_ALLOWED", "message": "use POST"}})

        def log_message(self, fmt, *args):
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    return server
