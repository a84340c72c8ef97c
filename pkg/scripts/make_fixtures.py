"""Regenerate the scene and hand files under fixtures/."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from gesture_grounding.gesture.handfile import save_hand
from gesture_grounding.gesture.keypoints import GestureClass, HandKeypoints
from gesture_grounding.gesture.synth import synth_gesture
from gesture_grounding.scene import DrawerGrid, ObjectEntry, Scene, SceneSpec, ToolBench, generate_scene, save_scene

OUT = Path(__file__).resolve().parents[1] / "fixtures"


def main() -> None:
    drawers = generate_scene(SceneSpec(DrawerGrid(8, 8, 0.15, (0.0, 0.0, 2.0))))
    save_scene(drawers, OUT / "drawers.scene")
    target = drawers.find("drawer_3_5").position
    save_hand(synth_gesture(GestureClass.POINTING, 0.0, 1, 0, target=target, hand_position=(0.15, 0.25, 0.9)),
              OUT / "point_3_5.hand")

    bench = ToolBench(("hammer", "screwdriver", "wirecutter"), ((-0.2, 0.2, 1.0), (0.0, 0.2, 1.0), (0.2, 0.2, 1.0)))
    save_scene(generate_scene(SceneSpec(bench)), OUT / "tool_bench.scene")

    cup = ObjectEntry("cup", (0.1, 0.2, 1.2))
    save_scene(Scene((cup,), cup.position[None, :]), OUT / "single.scene")

    # index PIP at the origin, tip 3 cm along +y; other joints spread so the palm is well formed
    world = np.zeros((21, 3))
    world[:, 2] = 0.5 + 0.01 * np.arange(21)
    world[6] = (0.0, 0.0, 0.0)
    world[8] = (0.0, 0.03, 0.0)
    save_hand([HandKeypoints(np.zeros((21, 2)), world)], OUT / "up.hand")


if __name__ == "__main__":
    main()
