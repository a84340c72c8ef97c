from __future__ import annotations

import numpy as np
import pytest

from gesture_grounding.sim.sweep import SweepConfig, hand_anchor, row_scene, spacing_distance_sweep
from oracles import pointing_accuracy_oracle

CELL = SweepConfig(spacings=(0.05,), distances=(1.5,), noise_sigma=0.003, trials=500)


def test_noiseless_is_perfect():
    r = spacing_distance_sweep(SweepConfig(noise_sigma=0.0, trials=20))
    assert np.all(r.accuracy == 1.0)


def test_row_geometry():
    s = row_scene(0.15)
    assert [o.label for o in s.objects] == ["cup"] * 3
    np.testing.assert_allclose(s.objects[2].position - s.objects[0].position, [0.3, 0, 0])
    assert np.linalg.norm(hand_anchor(1.5) - s.objects[1].position) == pytest.approx(1.5)


def test_seeded_reports_are_identical():
    cfg = SweepConfig(trials=30, seed=4)
    a, b = spacing_distance_sweep(cfg), spacing_distance_sweep(cfg)
    assert a.dumps() == b.dumps() and a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "spacing,distance,correct,trials,accuracy"


@pytest.mark.slow
def test_matches_independent_monte_carlo():
    # 40k oracle trials put its own standard error near 0.002
    expected = pointing_accuracy_oracle(0.05, 1.5, 0.003, 40000, seed=2024)
    got = float(spacing_distance_sweep(CELL).accuracy[0, 0])
    assert abs(got - expected) <= 0.03, (got, expected)


def test_estimator_is_unbiased_across_seeds():
    expected = pointing_accuracy_oracle(0.05, 1.5, 0.003, 8000, seed=99)
    runs = [float(spacing_distance_sweep(SweepConfig(spacings=(0.05,), distances=(1.5,), trials=500, seed=s))
                  .accuracy[0, 0]) for s in range(1, 9)]
    # mean of 4000 draws vs 8000 oracle draws: combined standard error about 0.007
    assert abs(np.mean(runs) - expected) <= 0.025


@pytest.mark.parametrize("bad", [dict(trials=0), dict(noise_sigma=-1.0), dict(spacings=(0.0,))])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        SweepConfig(**bad)
