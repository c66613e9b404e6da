"""Record HTTP fixtures for the UI contract tests.

Drives the real service (mock model backend, scripted world) and captures
the exact JSON the endpoints return, so the UI tests exercise genuine
payload shapes rather than hand-written approximations.

Run from the repository root:

    python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from fastapi.testclient import TestClient

from golden_scenario import TURNS, make_scenario_gateway
from duomem.service import create_app

FIXTURES = Path(__file__).resolve().parents[1] / "test" / "fixtures"


def record() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    out: dict[str, object] = {}
    with tempfile.TemporaryDirectory() as state_dir:
        client = TestClient(create_app(make_scenario_gateway(), state_dir=state_dir))

        out["create_session"] = client.post(
            "/sessions", json={"session_id": "demo", "config": {"tau": 5}}
        ).json()

        turn_responses = []
        for i, (user, assistant) in enumerate(TURNS[:8], 1):
            resp = client.post(
                "/sessions/demo/turns",
                json={"user_text": user, "assistant_text": assistant},
            )
            turn_responses.append(resp.json())
        out["turns"] = turn_responses

        query = client.post(
            "/sessions/demo/queries", json={"text": "What does mochi wear?"}
        ).json()
        out["query"] = query
        out["memory"] = client.get("/sessions/demo/memory").json()
        out["events"] = client.get("/sessions/demo/events").json()
        out["trace"] = client.get(
            f"/sessions/demo/traces/{query['trace_id']}"
        ).json()
        out["sessions"] = client.get("/sessions").json()

    for name, payload in out.items():
        path = FIXTURES / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    record()
