"""Service entry point: load models per config, then serve."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from .app import create_app
from .config import load_config


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="citeward-adapter")
    parser.add_argument("--config", help="JSON config file (defaults otherwise)")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        app = create_app(config)
    except (RuntimeError, ValueError, OSError) as exc:
        sys.stderr.write(f"startup failed: {exc}\n")
        return 1

    uvicorn.run(
        app,
        host=args.host or config.host,
        port=args.port if args.port is not None else config.port,
        log_level="warning",
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
