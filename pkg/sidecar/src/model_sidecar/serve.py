"""Uvicorn entry point: model-sidecar [--config sidecar.json]."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import SidecarConfig


def main() -> None:
    parser = argparse.ArgumentParser(description="Serve the model sidecar.")
    parser.add_argument("--config", help="JSON config file (see SidecarConfig)")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args()

    config = SidecarConfig.from_file(args.config) if args.config else SidecarConfig.from_env()
    host = args.host or config.host
    port = args.port or config.port
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()
