"""The request loop: JSON lines over stdio, or the same bodies over HTTP.

One request is in flight at a time per connection. Unknown ops and malformed
messages produce structured errors and the loop continues; a model failure
is fatal with a nonzero exit. Every response echoes the request's
``req_id``.
"""

from __future__ import annotations

import json
import logging
import sys
import threading
from typing import TextIO

from .config import BridgeConfig
from .generation import generate_with_containment, model_generator
from .model import ScoringModel

logger = logging.getLogger("lmbridge")


class RequestHandler:
    def __init__(self, config: BridgeConfig, model: ScoringModel | None = None):
        self.config = config
        self.model = model if model is not None else ScoringModel(config)

    def handle(self, request: dict) -> dict:
        req_id = request.get("req_id")
        try:
            body = self._dispatch(request)
        except (KeyError, TypeError, ValueError) as e:
            return {"req_id": req_id, "error": str(e)}
        body["req_id"] = req_id
        return body

    def handle_line(self, line: str) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            return {"req_id": None, "error": f"malformed message: {e.msg}"}
        if not isinstance(request, dict):
            return {"req_id": None, "error": "request must be a JSON object"}
        return self.handle(request)

    def _dispatch(self, request: dict) -> dict:
        op = request.get("op")
        model = self.model
        if op == "hello":
            return {
                "capabilities": [self.config.capability],
                "vocab_size": model.vocab_size,
                "model_id": model.model_id,
            }
        if op == "tokenize":
            ids, strings = model.tokenize(str(request["text"]))
            return {"token_ids": ids, "token_strings": strings}
        if op == "score_mlm":
            if self.config.capability != "mlm":
                raise ValueError("this bridge serves a causal model")
            token_ids = [int(t) for t in request["token_ids"]]
            position = int(request["mask_position"])
            if "target_id" in request:
                lp = model.score_mlm(token_ids, position,
                                     int(request["target_id"]))
                return {"logprob": lp}
            if "top_m" in request:
                return {"candidates": model.mlm_candidates(
                    token_ids, position, int(request["top_m"]))}
            raise ValueError("score_mlm needs target_id or top_m")
        if op == "score_causal":
            if self.config.capability != "causal":
                raise ValueError("this bridge serves a masked model")
            prefix = [int(t) for t in request["prefix_ids"]]
            lp = model.score_causal(prefix, int(request["target_id"]))
            return {"logprob": lp}
        if op == "generate_contexts":
            settings = self.config.generation
            if self.config.capability != "causal" or settings is None or not settings.enabled:
                raise ValueError("generation is not enabled on this bridge")
            result = generate_with_containment(
                str(request["entity"]),
                int(request.get("count", settings.count)),
                model_generator(model, settings),
                retry_budget=settings.retry_budget,
            )
            return {"sentences": result.sentences,
                    "shortfall": result.shortfall}
        raise ValueError(f"unknown op {op!r}")


def serve_stdio(
    config: BridgeConfig,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
) -> int:
    """Blocking request loop over standard streams."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    try:
        handler = RequestHandler(config)
    except Exception:
        logger.exception("model failed to load")
        return 1
    logger.info("serving %s over stdio", handler.model.model_id)
    for line in stdin:
        if not line.strip():
            continue
        response = handler.handle_line(line)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
    return 0


def serve_http(config: BridgeConfig, host: str, port: int) -> int:
    """Same bodies over HTTP POST; requests are serialized (one in flight)."""
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    try:
        handler = RequestHandler(config)
    except Exception:
        logger.exception("model failed to load")
        return 1
    lock = threading.Lock()

    class Endpoint(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length).decode("utf-8", errors="replace")
            with lock:
                response = handler.handle_line(raw)
            body = json.dumps(response).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *args):
            logger.info("http: " + fmt, *args)

    server = ThreadingHTTPServer((host, port), Endpoint)
    logger.info("serving %s on http://%s:%d", handler.model.model_id,
                host, server.server_address[1])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0
