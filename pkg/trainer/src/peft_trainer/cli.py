"""Console entry points: peft-train and peft-serve."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import TrainerError
from .train import PeftConfig, train_adapter
from .serve import serve_adapter


def train_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="peft-train", description="train one adapter")
    parser.add_argument("--data", required=True, help="instruction JSONL export")
    parser.add_argument("--technique", choices=("lora", "ia3", "prefix", "prompt"), default="lora")
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--out", required=True, help="artifact directory")
    args = parser.parse_args(argv)
    try:
        config = PeftConfig(
            technique=args.technique,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            seed=args.seed,
            batch_size=args.batch_size,
        )
        artifact = train_adapter(args.data, config, args.out)
    except TrainerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    manifest = artifact.manifest
    print(f"trained {manifest['artifact_id']}")
    print(
        f"trainable {manifest['trainable_parameters']} / {manifest['base_parameters']} "
        f"base parameters ({manifest['trainable_ratio']:.4%})"
    )
    print("losses per epoch: " + ", ".join(f"{x:.4f}" for x in manifest["losses_per_epoch"]))
    return 0


def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="peft-serve", description="serve an adapter artifact")
    parser.add_argument("--artifact", required=True)
    parser.add_argument("--port", type=int, default=8800)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    try:
        server = serve_adapter(args.artifact, args.port, args.host)
    except TrainerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"base_url": server.base_url, "model": server.artifact_id}))
    try:
        while True:
            server._thread.join(3600)
    except KeyboardInterrupt:
        server.close()
    return 0


if __name__ == "__main__":
    sys.exit(train_main())
