"""Command line: train a checkpoint from a training-set file, or serve
an existing checkpoint over HTTP."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .config import ServiceConfig


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="scorer-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train")
    p_train.add_argument("--dataset", required=True, help="training_set.jsonl")
    p_train.add_argument("--out", required=True, help="checkpoint path")
    p_train.add_argument("--config", help="JSON config file")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch", type=int)
    p_train.add_argument("--lr-encoder", type=float)
    p_train.add_argument("--lr-heads", type=float)
    p_train.add_argument("--seed", type=int)

    p_serve = sub.add_parser("serve")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)

    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level="INFO", format="%(levelname)s %(name)s: %(message)s")

    if args.command == "train":
        from .model import save_checkpoint
        from .training import read_training_file, train

        config = ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
        if args.epochs is not None:
            config.epochs = args.epochs
        if args.batch is not None:
            config.batch_size = args.batch
        if args.lr_encoder is not None:
            config.lr_encoder = args.lr_encoder
        if args.lr_heads is not None:
            config.lr_heads = args.lr_heads
        if args.seed is not None:
            config.seed = args.seed
        examples = read_training_file(args.dataset)
        model, vocab, history = train(examples, config)
        save_checkpoint(args.out, model, vocab, config)
        logging.getLogger(__name__).info(
            "trained %d examples; loss %.4f -> %.4f; checkpoint %s",
            len(examples), history[0], history[-1], args.out,
        )
        return 0

    if args.command == "serve":
        import uvicorn

        from .app import app_from_checkpoint
        from .model import load_checkpoint

        _, _, config = load_checkpoint(args.checkpoint)
        host = args.host or config.host
        port = args.port or config.port
        uvicorn.run(app_from_checkpoint(args.checkpoint), host=host, port=port, log_level="info")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
