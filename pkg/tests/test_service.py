from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request

import pytest

from gesture_grounding.planner.backends import ReplayBackend, RulePlannerBackend
from gesture_grounding.service import GroundingService, ServiceConfig, make_server


@pytest.fixture
def service(fixtures_dir):
    return GroundingService(ServiceConfig(RulePlannerBackend(), scenes_dir=fixtures_dir))


def _hand(fixtures_dir, name):
    return json.loads((fixtures_dir / name).read_text())


def call(svc, path, body):
    return svc.handle(path, json.dumps(body).encode())


def test_single_candidate(service, fixtures_dir):
    status, out = call(service, "/v1/resolve", {"scene_ref": "single.scene", "hand": _hand(fixtures_dir, "up.hand"),
                                                "target": "cup"})
    assert status == 200
    assert out["referent"]["label"] == "cup" and out["referent"]["position"] == [0.1, 0.2, 1.2]


def test_inline_scene(service, fixtures_dir):
    scene = json.loads((fixtures_dir / "drawers.scene").read_text())
    status, out = call(service, "/v1/resolve", {"scene": scene, "hand": _hand(fixtures_dir, "point_3_5.hand"),
                                                "target": "drawer"})
    assert status == 200 and out["referent"]["label"] == "drawer_3_5"


def test_direction(service, fixtures_dir):
    status, out = call(service, "/v1/resolve", {"mode": "direction", "hand": _hand(fixtures_dir, "up.hand")})
    assert status == 200 and out["referent"]["vector"] == [0.0, 1.0, 0.0]


def test_errors(service, fixtures_dir):
    status, out = call(service, "/v1/resolve", {"scene_ref": "single.scene", "hand": _hand(fixtures_dir, "up.hand"),
                                                "target": "unicorn"})
    assert (status, out["error"]["code"]) == (404, "NO_CANDIDATES")
    assert service.handle("/v1/resolve", b"{")[1]["error"]["code"] == "PARSE_ERROR"
    assert call(service, "/v1/resolve", {"mode": "gaze"})[1]["error"]["code"] == "BAD_REQUEST"
    assert call(service, "/v1/nope", {})[0] == 404
    assert call(service, "/v1/resolve", {"scene_ref": "../pyproject.toml", "hand": _hand(fixtures_dir, "up.hand"),
                                         "target": "cup"})[0] == 400


def test_plan(service):
    status, out = call(service, "/v1/plan", {"instruction": {"speech": "give me that tool", "gesture": "pointing"}})
    assert status == 200 and out["valid"] and out["program"].startswith("tool_pos =")


def test_plan_transcript_miss(tmp_path):
    svc = GroundingService(ServiceConfig(ReplayBackend(tmp_path)))
    status, out = call(svc, "/v1/plan", {"instruction": {"speech": "open the drawer", "gesture": "pointing"}})
    assert (status, out["error"]["code"]) == (404, "TRANSCRIPT_MISS")


def test_http_round_trip_and_fixtures_untouched(service, fixtures_dir):
    before = {p.name: p.read_bytes() for p in fixtures_dir.iterdir()}
    server = make_server(service, "127.0.0.1", 0)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        body = json.dumps({"mode": "direction", "hand": _hand(fixtures_dir, "up.hand")}).encode()
        results = []

        def post():
            req = urllib.request.Request(base + "/v1/resolve", body, {"Content-Type": "application/json"})
            with urllib.request.urlopen(req, timeout=10) as r:
                results.append(json.loads(r.read()))

        threads = [threading.Thread(target=post) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 8 and all(r["referent"]["vector"] == [0.0, 1.0, 0.0] for r in results)
        with pytest.raises(urllib.error.HTTPError) as e:
            urllib.request.urlopen(urllib.request.Request(base + "/v1/resolve", b"[]"), timeout=10)
        assert e.value.code == 400
    finally:
        server.shutdown()
        server.server_close()
    assert {p.name: p.read_bytes() for p in fixtures_dir.iterdir()} == before
