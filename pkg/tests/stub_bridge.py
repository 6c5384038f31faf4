"""Minimal scorer-protocol server used by the protocol tests.

Speaks the JSON-lines protocol over stdio with a uniform word-level model:
every conditional log-probability is -log(V). Flags make it misbehave on
purpose so client error paths can be exercised.
"""

import argparse
import json
import math
import sys

VOCAB: dict[str, int] = {}
WORDS: list[str] = []


def _tokenize(text: str):
    ids = []
    for w in text.split():
        if w not in VOCAB:
            VOCAB[w] = len(WORDS)
            WORDS.append(w)
        ids.append(VOCAB[w])
    return ids, text.split()


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--vocab-size", type=int, default=50)
    parser.add_argument("--capability", default="mlm,causal")
    parser.add_argument("--echo-wrong-req-id", action="store_true")
    parser.add_argument("--die-after", type=int, default=-1)
    args = parser.parse_args()

    logprob = -math.log(args.vocab_size)
    handled = 0
    for line in sys.stdin:
        if args.die_after >= 0 and handled >= args.die_after:
            return 1
        handled += 1
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            print(json.dumps({"error": "malformed message"}), flush=True)
            continue
        req_id = req.get("req_id")
        if args.echo_wrong_req_id:
            req_id = -1
        op = req.get("op")
        if op == "hello":
            resp = {
                "req_id": req_id,
                "capabilities": args.capability.split(","),
                "vocab_size": args.vocab_size,
                "model_id": "stub-bridge",
            }
        elif op == "tokenize":
            ids, words = _tokenize(req["text"])
            resp = {"req_id": req_id, "token_ids": ids, "token_strings": words}
        elif op == "score_mlm" and "target_id" in req:
            resp = {"req_id": req_id, "logprob": logprob}
        elif op == "score_mlm" and "top_m" in req:
            m = min(req["top_m"], len(WORDS)) or 1
            cands = [
                {"token_id": i, "token": WORDS[i] if i < len(WORDS) else f"w{i}",
                 "logprob": logprob}
                for i in range(m)
            ]
            resp = {"req_id": req_id, "candidates": cands}
        elif op == "score_causal":
            resp = {"req_id": req_id, "logprob": logprob}
        elif op == "generate_contexts":
            entity = req["entity"]
            resp = {
                "req_id": req_id,
                "sentences": [
                    f"stub sentence {i} about {entity}."
                    for i in range(req.get("count", 10))
                ],
            }
        else:
            resp = {"req_id": req_id, "error": f"unknown op {op!r}"}
        print(json.dumps(resp), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
