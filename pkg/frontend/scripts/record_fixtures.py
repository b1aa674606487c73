#!/usr/bin/env python3
"""Record server responses for the frontend contract tests.

Drives the engine's HTTP adapter in-process through the scripted demo
session and freezes the payloads the client renders from. Run from the
repo root:

    python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from conftest import build_metadata_fixtures, write_engine_home  # noqa: E402
from test_service import SESSION, call, envelope  # noqa: E402

from threadloom.engine import Engine, EngineConfig  # noqa: E402
from threadloom.service import ApiService  # noqa: E402

OUT = ROOT / "frontend" / "test" / "fixtures"


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="record-fixtures-"))
    home = write_engine_home(tmp / "home", build_metadata_fixtures(tmp / "fx"))
    app = ApiService(Engine(EngineConfig.load(home)))

    tank_snapshot = None
    for method, path, expected, payload in SESSION:
        body = envelope(expected, payload()) if expected is not None else None
        status, response = call(app, method, path, body)
        assert status == 200, (path, response)
        if path == "/highlights" and tank_snapshot is None:
            tank_snapshot = response["payload"]

    dump("highlight", tank_snapshot)
    status, response = call(app, "GET", "/threads")
    dump("drawer", response["payload"])
    status, response = call(app, "GET", "/threads/t0001/recommendations")
    dump("recommendations", response["payload"])
    status, response = call(app, "GET", "/threads/t0001/overview")
    dump("overview", response["payload"])
    status, response = call(app, "GET", "/suggest?text=reading%20interfaces&k=3")
    dump("suggest", response["payload"])


if __name__ == "__main__":
    main()
