"""HTTP surface: agents post an observed state and receive the ranked
policy table composed for it.

POST /policies with either {"featureValues": {...}} or {"stateName": "..."}
(exactly one of the two). Unrecognized states and compositions that exhaust
the radius cap are rejected with 422; malformed bodies get 400. GET /health
reports readiness. Shared graphs and embeddings are read-only; every
request composes with fresh closures, so requests never interleave state.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .composer import ComposerConfig, compose, policy_table_json
from .errors import CompositionFailureError, UnknownSituationError
from .kg import KnowledgeGraph
from .simulation import SimState, state_features
from .space import load_tsv
from .store import graph_of_state, load_store, recognize_across

log = logging.getLogger(__name__)


class BadRequest(ValueError):
    pass


def resolve_policy_request(graphs: list[KnowledgeGraph], body) -> tuple[KnowledgeGraph, SimState]:
    """Map a request body to (owning graph, starting state).

    Raises BadRequest for malformed bodies and UnknownSituationError when
    no state matches.
    """
    if not isinstance(body, dict):
        raise BadRequest("request body must be a JSON object")
    has_features = "featureValues" in body
    has_name = "stateName" in body
    if has_features == has_name:
        raise BadRequest(
            "exactly one of featureValues and stateName must be present"
        )
    if has_name:
        state_name = body["stateName"]
        if not isinstance(state_name, str):
            raise BadRequest("stateName must be a string")
        graph = graph_of_state(graphs, state_name)
        features = state_features(graph, state_name)
        return graph, SimState(feature_values=features, state_label=state_name)
    features = body["featureValues"]
    if not isinstance(features, dict):
        raise BadRequest("featureValues must be an object")
    graph, state = recognize_across(graphs, features)
    return graph, state


class PolicyService:
    """Request-independent context shared by all handler threads."""

    def __init__(self, graphs, space, composer_cfg=None):
        self.graphs = graphs
        self.space = space
        self.composer_cfg = composer_cfg or ComposerConfig()

    def policies_for(self, body) -> bytes:
        graph, state = resolve_policy_request(self.graphs, body)
        table, _trace = compose(graph, self.space, state, self.composer_cfg)
        return policy_table_json(table).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    server_version = "mdpcompose/0.1"

    def _send(self, status: int, payload: bytes):
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, document):
        self._send(status, json.dumps(document, separators=(",", ":")).encode("utf-8"))

    def do_GET(self):
        if self.path == "/health":
            self._send_json(200, {"status": "ok"})
        else:
            self._send_json(404, {"reason": "not found"})

    def do_POST(self):
        if self.path != "/policies":
            self._send_json(404, {"reason": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"")
        except (ValueError, json.JSONDecodeError):
            self._send_json(400, {"reason": "malformed request body"})
            return
        service: PolicyService = self.server.policy_service
        try:
            payload = service.policies_for(body)
        except BadRequest as exc:
            self._send_json(400, {"reason": str(exc)})
            return
        except UnknownSituationError:
            self._send_json(422, {"reason": "unknown state"})
            return
        except CompositionFailureError:
            self._send_json(422, {"reason": "no action within radius"})
            return
        self._send(200, payload)

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)


def build_server(graphs, space, bind: str = "127.0.0.1:0", composer_cfg=None) -> ThreadingHTTPServer:
    host, _, port_text = bind.partition(":")
    port = int(port_text) if port_text else 0
    server = ThreadingHTTPServer((host or "127.0.0.1", port), _Handler)
    server.policy_service = PolicyService(graphs, space, composer_cfg)
    return server


def serve(store_path, vectors_path, metadata_path, bind: str = "127.0.0.1:8080", composer_cfg=None):
    """Load the store and embeddings, then serve until interrupted."""
    try:
        graphs = load_store(store_path)
        space = load_tsv(vectors_path, metadata_path)
    except Exception as exc:
        raise RuntimeError(f"startup failed: {exc}") from exc
    server = build_server(graphs, space, bind, composer_cfg)
    host, port = server.server_address[:2]
    log.info("serving on %s:%s", host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
