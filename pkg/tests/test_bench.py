"""Benchmark harness: checkpointing, intervals, map generation, outputs."""

import csv
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from lcsim import (
    BenchError,
    BenchSpec,
    Condition,
    EpisodeLog,
    aggregate_rows,
    checkpoint_values,
    generate_map,
    read_aggregate_csv,
    render_metric_svg,
    replay,
    run_bench,
    student_t_ci,
    write_aggregate_csv,
)
from lcsim.bench import run_trial
from lcsim.curriculum import _derive_seed, _free_space_connected

from oracles import brute_ci


# ---------------------------------------------------------------------------
# confidence intervals


def test_student_t_ci_matches_brute_force():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4, 5, 10):
        values = [float(v) for v in rng.normal(3.0, 2.0, size=n)]
        mean, lo, hi = student_t_ci(values)
        bmean, blo, bhi = brute_ci(values)
        assert mean == pytest.approx(bmean, rel=0, abs=1e-12)
        # the quantile lookup inverts the CDF numerically, good to ~1e-10
        assert lo == pytest.approx(blo, rel=1e-9)
        assert hi == pytest.approx(bhi, rel=1e-9)


def test_student_t_ci_degenerate_cases():
    mean, lo, hi = student_t_ci([7.0])
    assert mean == 7.0 and math.isnan(lo) and math.isnan(hi)
    mean, lo, hi = student_t_ci([])
    assert math.isnan(mean) and math.isnan(lo) and math.isnan(hi)
    # zero variance: the interval collapses onto the mean
    mean, lo, hi = student_t_ci([4.0] * 6)
    assert (mean, lo, hi) == (4.0, 4.0, 4.0)


# ---------------------------------------------------------------------------
# checkpoint extraction


def _fake_log(rows) -> EpisodeLog:
    log = EpisodeLog(2)
    # columns: episode step obs c0 c1 c2 comm coll group a0 a1
    log.rows.extend([0, i, obs, c0, c1, c2, 0, 0, -0.2, 0.0, 0.0]
                    for i, (obs, c0, c1, c2) in enumerate(rows))
    return log


def test_checkpoint_values_last_row_at_or_below():
    log = _fake_log([(2, 2, 1, 0), (5, 4, 3, 1), (5, 5, 4, 1), (9, 6, 5, 2)])
    got = checkpoint_values(log, (1, 2, 5, 7, 20))
    assert got == {
        1: (0, 0, 0),      # before the first observation
        2: (2, 1, 0),      # boundary rows are included
        5: (5, 4, 1),      # later of two rows sharing an obs count
        7: (5, 4, 1),
        20: (6, 5, 2),     # clamped to the final row
    }


def test_checkpoint_values_empty_log():
    assert checkpoint_values(EpisodeLog(1), (1, 10)) == {1: (0, 0, 0),
                                                        10: (0, 0, 0)}


# ---------------------------------------------------------------------------
# sweep configuration


def test_condition_labels():
    assert Condition(p_l=0.1, n_obstacles=10).label == "obs10_pl0.1"
    assert Condition(p_l=0.0, n_obstacles=0).label == "obs0_pl0"
    assert Condition(p_l=0.25, occupancy=0.227).label == "occ22.7_pl0.25"


def test_condition_validation():
    with pytest.raises(BenchError):
        Condition()  # neither axis set
    with pytest.raises(BenchError):
        Condition(n_obstacles=1, occupancy=0.2)  # both set
    with pytest.raises(BenchError):
        Condition(n_obstacles=1, p_l=1.5)
    with pytest.raises(BenchError):
        Condition(occupancy=0.95)


def test_bench_spec_validation():
    good = dict(conditions=(Condition(n_obstacles=0),), checkpoints=(1, 2))
    BenchSpec(**good)
    with pytest.raises(BenchError):
        BenchSpec(**good, trials=1)
    with pytest.raises(BenchError):
        BenchSpec(conditions=(Condition(n_obstacles=0),),
                  checkpoints=(2, 1))
    with pytest.raises(BenchError):
        BenchSpec(conditions=(Condition(n_obstacles=0),),
                  checkpoints=(1, 1, 2))
    with pytest.raises(BenchError):
        BenchSpec(**good, policy="alphastar")


# ---------------------------------------------------------------------------
# map generation


def test_generate_map_counted_obstacles():
    world = generate_map(200.0, 200.0, seed=3, n_obstacles=5)
    assert len(world.obstacles) == 5
    for i, a in enumerate(world.obstacles):
        for b in world.obstacles[i + 1:]:
            assert not a.overlaps(b)
    assert _free_space_connected(list(world.obstacles), (200.0, 200.0), 1.0)
    assert len(world.landmarks) > 0
    assert all(not lm.destroyed for lm in world.landmarks)
    # same seed, same world, byte for byte
    assert generate_map(200.0, 200.0, seed=3, n_obstacles=5).to_json() \
        == world.to_json()


def test_generate_map_occupancy_target():
    world = generate_map(200.0, 200.0, seed=8, occupancy=0.15)
    assert abs(world.occupancy_percentage() - 0.15) <= 0.01
    assert _free_space_connected(list(world.obstacles), (200.0, 200.0), 1.0)


def test_generate_map_requires_one_axis():
    with pytest.raises(BenchError):
        generate_map(100.0, 100.0, seed=0)
    with pytest.raises(BenchError):
        generate_map(100.0, 100.0, seed=0, n_obstacles=1, occupancy=0.1)


def test_generate_map_destruction_stream():
    worlds = [generate_map(120.0, 120.0, seed=11, n_obstacles=0, p_l=0.5)
              for _ in range(2)]
    flags = [[lm.destroyed for lm in w.landmarks] for w in worlds]
    assert flags[0] == flags[1]
    assert any(flags[0]), "seed 11 should destroy at least one beacon"
    intact = generate_map(120.0, 120.0, seed=11, n_obstacles=0, p_l=0.0)
    # destruction only flips flags; the placement itself is untouched
    assert [(lm.id, lm.x, lm.y) for lm in intact.landmarks] \
        == [(lm.id, lm.x, lm.y) for lm in worlds[0].landmarks]
    assert not any(lm.destroyed for lm in intact.landmarks)


# ---------------------------------------------------------------------------
# trials and aggregation


def test_replay_is_deterministic():
    logs = []
    for _ in range(2):
        world = generate_map(60.0, 60.0, seed=21, n_obstacles=1)
        logs.append(replay(world, "random", seed=21, n_agents=2,
                           max_steps=150))
    assert logs[0].rows == logs[1].rows
    assert len(logs[0].rows) >= 1


def test_run_trial_uses_derived_seed():
    spec = BenchSpec(conditions=(Condition(n_obstacles=1),),
                     checkpoints=(5,), policy="random", trials=2, seed=9,
                     n_agents=2, width=60.0, height=60.0, max_steps=80)
    log = run_trial(spec, 0, 1)
    seed = _derive_seed(9, 0, 1)
    world = generate_map(60.0, 60.0, seed, n_obstacles=1)
    expected = replay(world, "random", seed, n_agents=2, max_steps=80,
                      episode=1)
    assert log.rows == expected.rows


def test_aggregate_rows_against_brute_force():
    spec = BenchSpec(conditions=(Condition(n_obstacles=0),),
                     checkpoints=(3, 8), policy="random", trials=2,
                     n_agents=2)
    logs = [
        _fake_log([(1, 1, 0, 0), (4, 3, 2, 1), (9, 5, 4, 2)]),
        _fake_log([(2, 2, 1, 0), (8, 4, 2, 1)]),
    ]
    rows = aggregate_rows(spec, {"obs0_pl0": logs})
    assert len(rows) == 2 * 3  # checkpoints x metrics
    expected_samples = {
        (3, "c0"): [1, 2], (3, "c1"): [0, 1], (3, "c2"): [0, 0],
        (8, "c0"): [3, 4], (8, "c1"): [2, 2], (8, "c2"): [1, 1],
    }
    for cond, cp, metric, mean, lo, hi in rows:
        assert cond == "obs0_pl0"
        bmean, blo, bhi = brute_ci(expected_samples[(cp, metric)])
        assert mean == pytest.approx(bmean, abs=1e-12)
        assert lo == pytest.approx(blo, rel=1e-9)
        assert hi == pytest.approx(bhi, rel=1e-9)


def test_aggregate_csv_round_trip(tmp_path):
    rows = [("obs0_pl0", 5, "c0", 3.5, 1.2, 5.8),
            ("obs0_pl0", 5, "c1", 2.0, math.nan, math.nan)]
    path = tmp_path / "agg.csv"
    write_aggregate_csv(rows, path)
    text = path.read_text()
    assert text.splitlines()[0] == "condition,checkpoint,metric,mean,ci_lo,ci_hi"
    assert "\r" not in text
    back = read_aggregate_csv(path)
    assert back[0] == rows[0]
    assert back[1][:4] == rows[1][:4]
    assert math.isnan(back[1][4]) and math.isnan(back[1][5])


def test_render_metric_svg():
    rows = [
        ("obs0_pl0", 5, "c0", 3.0, 2.5, 3.5),
        ("obs0_pl0", 10, "c0", 6.0, 5.0, 7.0),
        ("obs5_pl0", 5, "c0", 1.0, 0.5, 1.5),
        ("obs5_pl0", 10, "c0", 2.0, math.nan, math.nan),  # band collapses
        ("ghost", 10, "c0", math.nan, math.nan, math.nan),  # dropped
        ("obs0_pl0", 5, "c1", 9.0, 8.0, 10.0),  # other metric, ignored
    ]
    svg = render_metric_svg(rows, "c0")
    ET.fromstring(svg)  # well-formed XML
    assert svg.count("<polyline") == 2
    assert svg.count("<polygon") == 2
    assert "obs0_pl0" in svg and "obs5_pl0" in svg
    assert "ghost" not in svg
    assert "c0 vs observations" in svg


def test_render_metric_svg_empty():
    svg = render_metric_svg([], "c2")
    ET.fromstring(svg)
    assert "<polyline" not in svg


def test_run_bench_end_to_end(tmp_path):
    spec = BenchSpec(
        conditions=(Condition(n_obstacles=0), Condition(n_obstacles=1)),
        checkpoints=(5, 20), policy="random", trials=2, seed=1,
        n_agents=2, width=60.0, height=60.0, max_steps=150)
    agg_path = run_bench(spec, tmp_path)
    assert agg_path == tmp_path / "aggregate.csv"

    raw_paths = sorted(p.name for p in tmp_path.glob("raw_*.csv"))
    assert raw_paths == ["raw_obs0_pl0_trial0.csv", "raw_obs0_pl0_trial1.csv",
                        "raw_obs1_pl0_trial0.csv", "raw_obs1_pl0_trial1.csv"]
    for metric in ("c0", "c1", "c2"):
        svg = (tmp_path / f"{metric}.svg").read_text()
        ET.fromstring(svg)
        assert "<polyline" in svg

    # the aggregate must be recomputable from the raw trial files alone
    def raw_checkpoints(path: Path) -> dict[int, tuple[int, int, int]]:
        with open(path, newline="") as fh:
            rows = [[int(v) for v in row[:6]]
                    for row in list(csv.reader(fh))[1:]]
        out = {}
        for cp in spec.checkpoints:
            hits = [r for r in rows if r[2] <= cp]
            out[cp] = tuple(hits[-1][3:6]) if hits else (0, 0, 0)
        return out

    got = read_aggregate_csv(agg_path)
    assert len(got) == 2 * 2 * 3
    by_key = {(cond, cp, metric): (mean, lo, hi)
              for cond, cp, metric, mean, lo, hi in got}
    for condition in spec.conditions:
        samples = [raw_checkpoints(tmp_path /
                                   f"raw_{condition.label}_trial{t}.csv")
                   for t in range(spec.trials)]
        for cp in spec.checkpoints:
            for mi, metric in enumerate(("c0", "c1", "c2")):
                mean, lo, hi = by_key[(condition.label, cp, metric)]
                bmean, blo, bhi = brute_ci([s[cp][mi] for s in samples])
                assert mean == pytest.approx(bmean, abs=1e-9)
                assert lo == pytest.approx(blo, rel=1e-9, abs=1e-9)
                assert hi == pytest.approx(bhi, rel=1e-9, abs=1e-9)
