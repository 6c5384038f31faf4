"""Client side of the scorer wire protocol.

Messages are JSON objects, one per line, over a child process's standard
streams, or the same bodies POSTed over HTTP. Every request carries a
``req_id`` that the server must echo; a response body with an ``error`` key
signals a protocol-level failure. One request is in flight per connection at
a time; scale by pooling connections, not by pipelining.

Ops::

    {"op": "hello"}                                      -> capabilities, vocab_size, model_id
    {"op": "tokenize", "text": S}                        -> token_ids, token_strings
    {"op": "score_mlm", "token_ids": [...],
     "mask_position": i, "target_id": j}                 -> logprob
    {"op": "score_mlm", "token_ids": [...],
     "mask_position": i, "top_m": m}                     -> candidates (extension)
    {"op": "score_causal", "prefix_ids": [...],
     "target_id": j}                                     -> logprob
    {"op": "generate_contexts", "entity": S, "count": n} -> sentences (optional capability)

Negative ids in ``token_ids`` denote masked slots; the server substitutes
its mask token for them.
"""

from __future__ import annotations

import json
import subprocess
import threading
from typing import Sequence

from .errors import ProtocolError, TransportError
from .scorers import Candidate, TokenizedText, check_logprob


class _BaseScorerClient:
    """Shared request plumbing and the Scorer surface."""

    def __init__(self) -> None:
        self._req_id = 0
        self._lock = threading.Lock()
        self.capabilities: frozenset[str] = frozenset()
        self.vocab_size = 0
        self.model_id = "?"

    def _transport(self, payload: dict) -> dict:
        raise NotImplementedError

    def _request(self, op: str, **fields) -> dict:
        with self._lock:
            self._req_id += 1
            req_id = self._req_id
            payload = {"op": op, "req_id": req_id, **fields}
            response = self._transport(payload)
        if not isinstance(response, dict):
            raise ProtocolError(f"non-object response to {op!r}")
        if response.get("req_id") != req_id:
            raise ProtocolError(
                f"req_id mismatch: sent {req_id}, got {response.get('req_id')}"
            )
        if "error" in response:
            raise ProtocolError(f"server error for {op!r}: {response['error']}")
        return response

    def handshake(self) -> None:
        hello = self._request("hello")
        try:
            self.capabilities = frozenset(hello["capabilities"])
            self.vocab_size = int(hello["vocab_size"])
            self.model_id = str(hello["model_id"])
        except (KeyError, TypeError) as e:
            raise ProtocolError(f"malformed hello response: {e}") from e

    # Scorer surface -------------------------------------------------------

    def tokenize(self, text: str) -> TokenizedText:
        resp = self._request("tokenize", text=text)
        return TokenizedText(
            ids=tuple(int(i) for i in resp["token_ids"]),
            strings=tuple(str(s) for s in resp["token_strings"]),
        )

    def score_mlm(
        self, token_ids: Sequence[int], mask_position: int, target_id: int
    ) -> float:
        resp = self._request(
            "score_mlm",
            token_ids=list(token_ids),
            mask_position=mask_position,
            target_id=target_id,
        )
        return check_logprob(float(resp["logprob"]), self.model_id)

    def score_causal(self, prefix_ids: Sequence[int], target_id: int) -> float:
        resp = self._request(
            "score_causal", prefix_ids=list(prefix_ids), target_id=target_id
        )
        return check_logprob(float(resp["logprob"]), self.model_id)

    def mlm_candidates(
        self, token_ids: Sequence[int], mask_position: int, top_m: int
    ) -> list[Candidate]:
        resp = self._request(
            "score_mlm",
            token_ids=list(token_ids),
            mask_position=mask_position,
            top_m=top_m,
        )
        out = []
        for c in resp["candidates"]:
            out.append(Candidate(
                token_id=int(c["token_id"]),
                token=str(c["token"]),
                logprob=check_logprob(float(c["logprob"]), self.model_id),
            ))
        return out

    def generate_contexts(self, entity: str, count: int = 10) -> list[str]:
        resp = self._request("generate_contexts", entity=entity, count=count)
        return [str(s) for s in resp["sentences"]]


class StdioScorerClient(_BaseScorerClient):
    """Scorer served by a child process over line-delimited stdio."""

    def __init__(self, command: Sequence[str]):
        super().__init__()
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as e:
            raise TransportError(f"cannot start scorer {command!r}: {e}") from e
        self.handshake()

    def _transport(self, payload: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise TransportError(
                f"scorer process exited with code {proc.returncode}"
            )
        try:
            proc.stdin.write(json.dumps(payload) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise TransportError(f"scorer pipe failed: {e}") from e
        if not line:
            raise TransportError("scorer closed its output stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"invalid JSON from scorer: {line!r}") from e

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "StdioScorerClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class HttpScorerClient(_BaseScorerClient):
    """Scorer behind an HTTP endpoint accepting the same JSON bodies."""

    def __init__(self, url: str, timeout: float = 60.0):
        super().__init__()
        import requests

        self._url = url
        self._timeout = timeout
        self._session = requests.Session()
        self.handshake()

    def _transport(self, payload: dict) -> dict:
        import requests

        try:
            resp = self._session.post(
                self._url, json=payload, timeout=self._timeout
            )
        except requests.RequestException as e:
            raise TransportError(f"scorer HTTP request failed: {e}") from e
        if resp.status_code != 200:
            raise TransportError(f"scorer returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as e:
            raise ProtocolError("scorer returned non-JSON body") from e

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "HttpScorerClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
