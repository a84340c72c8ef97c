from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesture_grounding.errors import InvalidSpec, InvariantViolation, ParseError, SemanticFilterRejected
from gesture_grounding.planner.prompt import Prompt
from gesture_grounding.scene import (CompletionFilter, DrawerGrid, ObjectEntry, Ontology, RandomScene, Scene,
                                     SceneSpec, ToolBench, default_ontology, dumps_scene, generate_scene, load_scene,
                                     loads_scene, semantic_filter)

BENCH = ToolBench(("hammer", "screwdriver", "cup"), ((-0.2, 0.2, 1.0), (0.0, 0.2, 1.0), (0.2, 0.2, 1.0)))


class TestGenerate:
    def test_drawer_grid_has_64(self):
        s = generate_scene(SceneSpec(DrawerGrid(8, 8, 0.10)))
        assert len(s.objects) == 64
        assert {o.label for o in s.objects} == {f"drawer_{r}_{c}" for r in range(1, 9) for c in range(1, 9)}
        assert len({o.position[2] for o in s.objects}) == 1  # one vertical plane

    def test_drawer_grid_geometry(self):
        s = generate_scene(SceneSpec(DrawerGrid(2, 3, 0.2, (1.0, 0.0, 2.0))))
        np.testing.assert_allclose(s.find("drawer_1_1").position, [0.8, -0.1, 2.0])
        np.testing.assert_allclose(s.find("drawer_2_3").position, [1.2, 0.1, 2.0])

    def test_tool_bench(self):
        s = generate_scene(SceneSpec(BENCH))
        assert s.labels == ["hammer", "screwdriver", "cup"]
        np.testing.assert_array_equal(s.find("cup").position, [0.2, 0.2, 1.0])

    def test_random_seeded(self):
        spec = SceneSpec(RandomScene(10, ("cup", "bowl", "pen")), seed=7)
        assert dumps_scene(generate_scene(spec)) == dumps_scene(generate_scene(spec))
        other = SceneSpec(RandomScene(10, ("cup", "bowl", "pen")), seed=8)
        assert dumps_scene(generate_scene(spec)) != dumps_scene(generate_scene(other))

    @pytest.mark.parametrize("kind", [DrawerGrid(0, 3, 0.1), DrawerGrid(2, 2, 0.0), RandomScene(0, ("a",)),
                                      ToolBench(("a",), ())])
    def test_invalid_specs(self, kind):
        with pytest.raises(InvalidSpec):
            generate_scene(SceneSpec(kind))

    @given(st.integers(1, 6), st.integers(1, 6), st.floats(0.03, 0.3), st.integers(0, 100))
    def test_objects_in_cloud(self, rows, cols, spacing, seed):
        for kind in (DrawerGrid(rows, cols, spacing), RandomScene(rows * cols, ("a", "b"))):
            s = generate_scene(SceneSpec(kind, seed))
            for o in s.objects:
                assert np.min(np.linalg.norm(s.cloud - o.position, axis=1)) <= 1e-6

    def test_spec_dict_round_trip(self):
        for kind in (DrawerGrid(2, 2, 0.1), BENCH, RandomScene(3, ("x",))):
            spec = SceneSpec(kind, 4)
            assert SceneSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestFiles:
    def test_round_trip(self, tmp_path):
        s = generate_scene(SceneSpec(BENCH))
        (tmp_path / "b.scene").write_text(dumps_scene(s))
        assert load_scene(tmp_path / "b.scene") == s

    def test_empty_label(self):
        d = json.loads(dumps_scene(generate_scene(SceneSpec(BENCH))))
        d["objects"][1]["label"] = ""
        with pytest.raises(InvariantViolation) as e:
            loads_scene(json.dumps(d))
        assert e.value.path == "objects[1].label"

    def test_object_outside_cloud(self):
        d = {"format_version": 1, "camera": {"fx": 600, "fy": 600, "cx": 320, "cy": 240, "width": 640,
                                             "height": 480},
             "objects": [{"label": "cup", "pos": [0, 0, 1]}], "cloud": [[0, 0, 2]]}
        with pytest.raises(InvariantViolation):
            loads_scene(json.dumps(d))

    def test_garbage(self):
        with pytest.raises(ParseError):
            loads_scene("{")
        with pytest.raises(InvariantViolation):
            loads_scene('{"format_version": 2}')

    def test_tool_bench_fixture(self, fixtures_dir):
        s = load_scene(fixtures_dir / "tool_bench.scene")
        assert s.labels == ["hammer", "screwdriver", "wirecutter"]
        assert [o.label for o in semantic_filter("tool", default_ontology(), s.objects)] == s.labels


class TestSemanticFilter:
    OBJS = [ObjectEntry("hammer", (0, 0, 1)), ObjectEntry("screwdriver", (0.1, 0, 1)), ObjectEntry("cup", (0.2, 0, 1))]

    def test_category(self):
        onto = Ontology({"tool": frozenset({"hammer", "screwdriver", "wirecutter"})})
        assert [o.label for o in semantic_filter("tool", onto, self.OBJS)] == ["hammer", "screwdriver"]

    def test_identity(self):
        assert semantic_filter("cup", Ontology({}), self.OBJS) == [self.OBJS[2]]

    def test_unknown_target(self):
        assert semantic_filter("unicorn", default_ontology(), self.OBJS) == []

    def test_glob_entries(self):
        onto = default_ontology()
        drawers = [ObjectEntry("drawer_1_2", (0, 0, 1)), ObjectEntry("cup", (0, 0, 2))]
        assert semantic_filter("drawer", onto, drawers) == drawers[:1]

    @given(st.lists(st.sampled_from(["hammer", "cup", "pliers", "drawer_2_2", "water jug", "bowl"]), max_size=8),
           st.sampled_from(["tool", "drawer", "cup", "object", "drink", "unicorn"]))
    def test_subset_and_idempotent(self, labels, target):
        objs = [ObjectEntry(lbl, (k, 0, 1)) for k, lbl in enumerate(labels)]
        onto = default_ontology()
        out = semantic_filter(target, onto, objs)
        assert all(o in objs for o in out)
        assert [objs.index(o) for o in out] == sorted(objs.index(o) for o in out)
        assert semantic_filter(target, onto, out) == out

    def test_ontology_file_round_trip(self):
        onto = default_ontology()
        assert Ontology.from_dict(onto.to_dict()) == onto


class _Fixed:
    def __init__(self, text):
        self.text = text

    def complete(self, prompt: Prompt) -> str:
        return self.text


class TestCompletionFilter:
    OBJS = TestSemanticFilter.OBJS

    def test_accepts_vocabulary_subset(self):
        f = CompletionFilter(_Fixed(" hammer, screwdriver\n"))
        assert f("tool", self.OBJS) == self.OBJS[:2]
        assert CompletionFilter(_Fixed("none"))("tool", self.OBJS) == []

    def test_rejects_invented_labels(self):
        with pytest.raises(SemanticFilterRejected):
            CompletionFilter(_Fixed("hammer, chainsaw"))("tool", self.OBJS)


def test_scene_invariant_enforced():
    with pytest.raises(ValueError):
        Scene((ObjectEntry("cup", (0, 0, 1)),), np.zeros((0, 3)))
