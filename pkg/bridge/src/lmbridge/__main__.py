import argparse
import logging
import os
import sys

from .config import BridgeConfig, GenerationSettings
from .server import serve_http, serve_stdio


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lmbridge",
        description="Serve a transformer checkpoint over the scorer protocol",
    )
    parser.add_argument("--model-dir",
                        default=os.environ.get("LMBRIDGE_MODEL_DIR"),
                        help="checkpoint directory (or LMBRIDGE_MODEL_DIR)")
    parser.add_argument("--capability", choices=("mlm", "causal"),
                        default=os.environ.get("LMBRIDGE_CAPABILITY", "mlm"))
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-seq-len", type=int, default=512)
    parser.add_argument("--transport", choices=("stdio", "http"),
                        default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8757)
    parser.add_argument("--enable-generation", action="store_true")
    parser.add_argument("--generation-count", type=int, default=10)
    parser.add_argument("--generation-max-new-tokens", type=int, default=24)
    parser.add_argument("--generation-temperature", type=float, default=0.8)
    parser.add_argument("--generation-seed", type=int, default=0)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    # stdout carries protocol traffic; logs go to stderr only
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="lmbridge %(levelname)s %(message)s",
    )
    if not args.model_dir:
        parser.error("--model-dir (or LMBRIDGE_MODEL_DIR) is required")

    generation = None
    if args.enable_generation:
        generation = GenerationSettings(
            enabled=True,
            count=args.generation_count,
            max_new_tokens=args.generation_max_new_tokens,
            temperature=args.generation_temperature,
            seed=args.generation_seed,
        )
    config = BridgeConfig(
        model_dir=args.model_dir,
        capability=args.capability,
        device=args.device,
        max_seq_len=args.max_seq_len,
        generation=generation,
    )
    if args.transport == "http":
        return serve_http(config, args.host, args.port)
    return serve_stdio(config)


if __name__ == "__main__":
    sys.exit(main())
