"""Regenerate the replay transcripts shipped with the package.

The water-jug replies are the two reference plan listings, stored under the
digests of the prompts the scenario actually sends. The parse-error store
holds a truncated reply for every prompt of its scenario.
"""
from __future__ import annotations

from pathlib import Path

from gesture_grounding.planner.backends import write_transcript
from gesture_grounding.sim.scenario import load_scenario, packaged_scenario, run_scenario

LISTING = {
    "pick up the water jug": "water_jug_pos = detect_referred_obj_pos('water jug')\npick_up_obj_at_pos(water_jug_pos)\n",
    "hand it to me": "target_pos = detect_hand_center_pos()\nmove_gripper_to_pos(target_pos)\nopen_gripper()\n",
}


class TableBackend:
    """Reply by the speech of the prompt's final instruction, recording every prompt."""

    def __init__(self, table, store):
        self.table, self.store = table, Path(store)

    def complete(self, prompt):
        speech = prompt.instruction_block.split("\n")[0].split(":", 1)[1].strip()
        text = self.table(speech)
        write_transcript(self.store, prompt, text)
        return text


def record(name: str, table) -> None:
    spec = load_scenario(packaged_scenario(name))
    store = Path(spec.planner.store)
    for old in store.glob("*"):
        old.unlink()
    m = run_scenario(spec, backend=TableBackend(table, store))
    print(f"{name}: {len(list(store.iterdir()))} transcript(s), execution_success={m.execution_success}")


if __name__ == "__main__":
    record("water_jug", LISTING.__getitem__)
    record("parse_error", lambda speech: "pick_up(")
