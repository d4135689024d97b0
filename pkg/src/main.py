"""Console entry point: ``python -m src.main <command> ...`` (installed as ``ehfbl``)."""

from __future__ import annotations

from src.interfaces.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
