#!/usr/bin/env python3
"""Record the golden request/response transcripts for the pinned tiny
checkpoints (25 pairs per capability, 50 total). Replay tolerance for
logprob fields is 1e-4; everything else must match exactly.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from lmbridge.config import BridgeConfig  # noqa: E402
from lmbridge.server import RequestHandler  # noqa: E402

FIXTURES = ROOT / "fixtures"

SENTENCES = [
    "the king went to the market",
    "a soldier said it was old",
    "the queen and the king",
    "they went north with the ship",
    "the dog was at the house",
    "she said the river is blue",
]


def mlm_requests(handler: RequestHandler) -> list[dict]:
    requests = [{"op": "hello"}]
    tokenized = []
    for text in SENTENCES:
        requests.append({"op": "tokenize", "text": text})
        ids, _ = handler.model.tokenize(text)
        tokenized.append(ids)
    for i, ids in enumerate(tokenized):
        requests.append({
            "op": "score_mlm", "token_ids": ids,
            "mask_position": i % len(ids), "target_id": ids[i % len(ids)],
        })
    for ids in tokenized[:4]:
        masked = [-1 if p == 1 else t for p, t in enumerate(ids)]
        requests.append({
            "op": "score_mlm", "token_ids": masked,
            "mask_position": 1, "target_id": ids[1],
        })
    for ids in tokenized[:4]:
        requests.append({
            "op": "score_mlm", "token_ids": ids, "mask_position": 0,
            "top_m": 5,
        })
    requests.append({"op": "score_mlm", "token_ids": tokenized[0],
                     "mask_position": 99, "target_id": 5})
    requests.append({"op": "definitely_not_an_op"})
    requests.append({"op": "tokenize", "text": ""})
    requests.append({"op": "score_causal", "prefix_ids": [5], "target_id": 6})
    assert len(requests) == 25, len(requests)
    return requests


def causal_requests(handler: RequestHandler) -> list[dict]:
    requests = [{"op": "hello"}]
    tokenized = []
    for text in SENTENCES:
        requests.append({"op": "tokenize", "text": text})
        ids, _ = handler.model.tokenize(text)
        tokenized.append(ids)
    for ids in tokenized:
        for cut in (0, len(ids) // 2):
            requests.append({
                "op": "score_causal", "prefix_ids": ids[:cut],
                "target_id": ids[cut],
            })
    requests.append({"op": "score_causal", "prefix_ids": [], "target_id": 5})
    requests.append({"op": "score_causal", "prefix_ids": [5, 6],
                     "target_id": 9999})
    requests.append({"op": "score_mlm", "token_ids": [5], "mask_position": 0,
                     "target_id": 5})
    requests.append({"op": "nonsense"})
    requests.append({"op": "tokenize", "text": "red blue green"})
    requests.append({"op": "hello"})
    assert len(requests) == 25, len(requests)
    return requests


def record(capability: str, model_dir: Path, out: Path, build) -> None:
    handler = RequestHandler(BridgeConfig(str(model_dir), capability,
                                          max_seq_len=64))
    pairs = []
    for i, request in enumerate(build(handler), start=1):
        request = {"req_id": i, **request}
        response = handler.handle(request)
        pairs.append({"request": request, "response": response})
    with out.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair, sort_keys=True) + "\n")
    print(f"{out}: {len(pairs)} pairs")


def main() -> int:
    out_dir = FIXTURES / "transcripts"
    out_dir.mkdir(exist_ok=True)
    record("mlm", FIXTURES / "tiny-mlm", out_dir / "mlm.jsonl", mlm_requests)
    record("causal", FIXTURES / "tiny-causal", out_dir / "causal.jsonl",
           causal_requests)
    return 0


if __name__ == "__main__":
    sys.exit(main())
