from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from gesture_grounding.cli import main
from gesture_grounding.sim.scenario import packaged_scenario


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_resolve_drawer(fixtures_dir, capsys):
    code, out, _ = run(["resolve", "--scene", str(fixtures_dir / "drawers.scene"),
                        "--hand", str(fixtures_dir / "point_3_5.hand"), "--target", "drawer"], capsys)
    assert code == 0
    assert out == "drawer_3_5 0.075000 -0.225000 2.000000\n"


def test_resolve_direction(fixtures_dir, capsys):
    code, out, _ = run(["resolve", "--mode", "direction", "--hand", str(fixtures_dir / "up.hand")], capsys)
    assert (code, out) == (0, "direction 0.000000 1.000000 0.000000\n")


def test_resolve_no_candidates(fixtures_dir, capsys):
    code, _, err = run(["resolve", "--scene", str(fixtures_dir / "tool_bench.scene"),
                        "--hand", str(fixtures_dir / "point_3_5.hand"), "--target", "unicorn"], capsys)
    assert code == 1 and "NO_CANDIDATES" in err


def test_plan_validate_only(capsys):
    code, out, _ = run(["plan", "--speech", "give me that tool", "--gesture", "pointing", "--backend", "rule",
                        "--validate-only"], capsys)
    assert code == 0
    assert out.startswith("tool_pos = detect_referred_obj_pos('tool')\n")


def test_plan_executes_on_fixture(fixtures_dir, capsys):
    code, out, _ = run(["plan", "--speech", "open that drawer", "--gesture", "pointing",
                        "--scene", str(fixtures_dir / "drawers.scene"), "--hand", str(fixtures_dir / "point_3_5.hand")],
                       capsys)
    assert code == 0
    world = json.loads(out[out.index("{"):])["world"]
    assert [k for k, d in world["drawers"].items() if d["open"]] == ["drawer_3_5"]


def test_plan_replay_miss(tmp_path, capsys):
    code, _, err = run(["plan", "--speech", "hi", "--backend", "replay", "--store", str(tmp_path)], capsys)
    assert code == 1 and "TRANSCRIPT_MISS" in err


def test_missing_scenario(capsys):
    code, _, err = run(["run", "--scenario", "missing.file"], capsys)
    assert code == 1 and "missing.file" in err


@pytest.mark.parametrize("argv", [["frobnicate"], ["resolve"], ["sweep", "--trials", "x"],
                                  ["resolve", "--hand", "h", "--mode", "object"]])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_run_reports_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    scenario = str(packaged_scenario("water_jug"))
    assert main(["run", "--scenario", scenario, "--out", str(a)]) == 0
    assert main(["run", "--scenario", scenario, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["execution_success"] is True


def test_batch_and_sweep(tmp_path, capsys):
    d = tmp_path / "scenarios"
    d.mkdir()
    for name in ("drawer", "tools"):
        shutil.copy(packaged_scenario(name), d)
    assert main(["batch", "--dir", str(d), "--out", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.csv").read_text().splitlines()[1:] == ["drawer,true,true,1", "tools,true,true,1"]
    assert main(["sweep", "--trials", "20", "--seed", "3", "--format", "csv", "--out", str(tmp_path / "s.csv")]) == 0
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 10


def test_scene_and_gesture_files(tmp_path, capsys):
    scene = tmp_path / "g.scene"
    assert main(["scene", "gen", "--rows", "2", "--cols", "2", "--out", str(scene)]) == 0
    code, out, _ = run(["scene", "show", str(scene)], capsys)
    assert code == 0 and "drawer_2_2" in out
    hand = tmp_path / "p.hand"
    assert main(["gesture", "synth", "--class", "pointing", "--target", "0,0,2", "--out", str(hand)]) == 0
    code, out, _ = run(["resolve", "--scene", str(scene), "--hand", str(hand), "--target", "drawer"], capsys)
    assert code == 0 and out.startswith("drawer_")


def test_gi_eval(tmp_path, capsys):
    code, out, _ = run(["gi-eval", "--fidelities", "label", "--out", str(tmp_path / "gi.json")], capsys)
    assert code == 0
    assert "Deictic" in out and "8/8" in out
    assert json.loads((tmp_path / "gi.json").read_text())["counts"]["Deictic"]["label"] == [8, 8]


def test_console_script(fixtures_dir):
    exe = shutil.which("gground")
    if exe is None:
        pytest.skip("package not installed with its console script")
    r = subprocess.run([exe, "resolve", "--mode", "direction", "--hand", str(fixtures_dir / "up.hand")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "direction 0.000000 1.000000 0.000000\n"
