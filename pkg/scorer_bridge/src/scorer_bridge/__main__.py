"""Run the service: ``python -m scorer_bridge`` or the scorer-bridge script."""

import argparse
import os

import uvicorn

from .app import create_app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scorer-bridge")
    parser.add_argument("--port", type=int,
                        default=int(os.environ.get("SCORER_PORT", "8701")))
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
