from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gesture_grounding.gesture.keypoints import HandKeypoints

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_hand(pip=(0.0, 0.0, 0.0), tip=(0.03, 0.0, 0.0), fill=(0.0, 0.1, 0.5)) -> HandKeypoints:
    """A hand whose only meaningful joints are the index PIP and tip."""
    world = np.tile(np.asarray(fill, float), (21, 1))
    world[6] = pip
    world[8] = tip
    return HandKeypoints(np.zeros((21, 2)), world)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def models():
    from gesture_grounding.sim.scenario import shipped_models

    return shipped_models()


LABEL_POOL = ("cup", "bowl", "hammer", "screwdriver", "wrench", "pen")
CATEGORIES = {"tool": {"hammer", "screwdriver", "wrench"}, "thing": set(LABEL_POOL), "dish": {"cup", "bowl"}}
TARGETS = ("tool", "thing", "dish", "cup", "pen")


def allowed_labels(target: str) -> set[str]:
    return CATEGORIES.get(target, set()) | {target}


def random_instance(seed: int):
    """A random scene (<= 64 objects), a valid pointing hand, a target and its ontology.

    Roughly one instance in five duplicates positions so the tie rule is exercised.
    """
    from gesture_grounding.scene import ObjectEntry, Ontology, Scene

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 65))
    labels = [LABEL_POOL[i] for i in rng.integers(0, len(LABEL_POOL), n)]
    P = rng.uniform([-1.0, -0.5, 0.5], [1.0, 0.5, 3.0], size=(n, 3))
    if rng.random() < 0.2 and n > 1:
        P[rng.integers(0, n, n // 2)] = P[0]
    objs = tuple(ObjectEntry(lbl, p) for lbl, p in zip(labels, P))
    scene = Scene(objs, P.copy())
    pip = rng.uniform([-0.3, -0.2, 0.2], [0.3, 0.3, 0.8])
    v = rng.normal(size=3)
    v[2] = abs(v[2]) + 0.2
    tip = pip + 0.03 * v / np.linalg.norm(v)
    hand = make_hand(pip=pip, tip=tip)
    target = TARGETS[int(rng.integers(0, len(TARGETS)))]
    onto = Ontology({k: frozenset(v) for k, v in CATEGORIES.items()})
    return scene, hand, target, onto


# --- acceptance summary -------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
