"""Benchmark harness: trial batches, checkpoint aggregation, CSV/SVG output.

Curves are reported against the observation count rather than wall-clock or
step index, so policies with different speeds stay comparable: each trial's
metric at checkpoint ``k`` is read from the last logged row whose cumulative
``obs_count`` is at most ``k`` (zero before the first observation). Means
carry two-sided 95% Student-t intervals over trials; a condition with fewer
than two usable trials is kept in the output with NaN interval bounds.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .curriculum import _derive_seed, _free_space_connected, sample_obstacles
from .episode import EpisodeLog, EpisodeRunner, run_episode
from .placement import PlacementConfig, destroy_landmarks, place_landmarks
from .policies import FrontierPolicy, RandomPolicy
from .world import Obstacle, World, WorldConfig

__all__ = ["BenchError", "Condition", "BenchSpec", "student_t_ci",
           "checkpoint_values", "generate_map", "replay", "run_trial",
           "run_bench", "write_aggregate_csv", "render_metric_svg"]

logger = logging.getLogger(__name__)

METRICS = ("c0", "c1", "c2")


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class Condition:
    """A sweep point: either a fixed obstacle count or an occupancy target."""

    p_l: float = 0.0
    n_obstacles: int | None = None
    occupancy: float | None = None  # fraction of the arena, e.g. 0.227

    def __post_init__(self):
        if (self.n_obstacles is None) == (self.occupancy is None):
            raise BenchError(
                "exactly one of n_obstacles / occupancy must be set")
        if not 0.0 <= self.p_l <= 1.0:
            raise BenchError("p_l must be in [0, 1]")
        if self.occupancy is not None and not 0.0 <= self.occupancy < 0.9:
            raise BenchError("occupancy target must be in [0, 0.9)")

    @property
    def label(self) -> str:
        pl = f"pl{self.p_l:g}"
        if self.n_obstacles is not None:
            return f"obs{self.n_obstacles}_{pl}"
        return f"occ{100.0 * self.occupancy:g}_{pl}"


@dataclass(frozen=True)
class BenchSpec:
    conditions: tuple[Condition, ...]
    checkpoints: tuple[int, ...]
    policy: str = "frontier"
    trials: int = 10
    seed: int = 0
    n_agents: int = 4
    width: float = 200.0
    height: float = 200.0
    max_steps: int = 20000
    workers: int = 1

    def __post_init__(self):
        if self.trials < 2:
            raise BenchError("trials must be >= 2 for interval estimates")
        if not self.checkpoints or list(self.checkpoints) != sorted(
                set(self.checkpoints)):
            raise BenchError("checkpoints must be strictly increasing")
        if self.policy not in ("frontier", "random"):
            raise BenchError(f"unknown policy {self.policy!r}")


def student_t_ci(values: Sequence[float], confidence: float = 0.95,
                 ) -> tuple[float, float, float]:
    """(mean, lo, hi); NaN bounds when fewer than two samples."""
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        return (math.nan, math.nan, math.nan)
    mean = float(arr.mean())
    if n < 2:
        return (mean, math.nan, math.nan)
    sd = float(arr.std(ddof=1))
    half = float(stats.t.ppf(0.5 * (1.0 + confidence), n - 1)
                 * sd / math.sqrt(n))
    return (mean, mean - half, mean + half)


def checkpoint_values(log: EpisodeLog, checkpoints: Sequence[int],
                      ) -> dict[int, tuple[int, int, int]]:
    """Metric triple at each checkpoint: last row with obs_count <= cp."""
    out: dict[int, tuple[int, int, int]] = {}
    rows = log.rows
    j = -1
    for cp in checkpoints:
        while j + 1 < len(rows) and rows[j + 1][2] <= cp:
            j += 1
        out[cp] = (0, 0, 0) if j < 0 else (rows[j][3], rows[j][4], rows[j][5])
    return out


def _obstacle_bounds(width: float, height: float,
                     ) -> tuple[tuple[float, float], tuple[float, float]]:
    return (0.10 * width, 0.25 * width), (0.25 * height, 0.50 * height)


def generate_map(width: float, height: float, seed: int,
                 n_obstacles: int | None = None,
                 occupancy: float | None = None, p_l: float = 0.0,
                 placement: PlacementConfig | None = None) -> World:
    """Build a world: obstacles (counted or occupancy-targeted), beacons,
    then the destruction draw.

    Occupancy targeting adds overlap-free rectangles sized to the remaining
    deficit until the sampled occupancy lands within one percentage point of
    the target, so the loop approaches from below and terminates.
    """
    if (n_obstacles is None) == (occupancy is None):
        raise BenchError("exactly one of n_obstacles / occupancy must be set")
    config = WorldConfig(width=width, height=height)
    rng = np.random.default_rng([seed, 1])
    w_bounds, h_bounds = _obstacle_bounds(width, height)
    if n_obstacles is not None:
        obstacles = sample_obstacles(n_obstacles, (width, height),
                                     w_bounds, h_bounds, rng)
    else:
        obstacles = _occupancy_obstacles(occupancy, config, rng)
    world = World(config, obstacles=obstacles)
    place_landmarks(world, placement or PlacementConfig())
    destroy_landmarks(world.landmarks, p_l, np.random.default_rng([seed, 2]))
    return world


def _occupancy_obstacles(target: float, config: WorldConfig,
                         rng: np.random.Generator,
                         tolerance: float = 0.01) -> list[Obstacle]:
    width, height = config.width, config.height
    w_bounds, h_bounds = _obstacle_bounds(width, height)
    obstacles: list[Obstacle] = []
    for _ in range(500):
        occ = World(config, obstacles=list(obstacles)).occupancy_percentage()
        deficit = target - occ
        if abs(deficit) <= tolerance:
            return obstacles
        if deficit < 0:  # quantization overshoot: retract and retry smaller
            obstacles.pop()
            continue
        area = deficit * width * height
        for _ in range(200):
            w = rng.uniform(max(2.0, min(w_bounds[0], math.sqrt(area))),
                            w_bounds[1])
            h = min(max(2.0, area / w), h_bounds[1])
            x = rng.uniform(0.0, width - w)
            y = rng.uniform(0.0, height - h)
            ob = Obstacle(x, y, w, h)
            if (not any(ob.overlaps(other) for other in obstacles)
                    and _free_space_connected(obstacles + [ob],
                                              (width, height), 1.0)):
                obstacles.append(ob)
                break
        else:
            raise BenchError("could not fit an obstacle for the "
                             f"occupancy target {target:.3f}")
    raise BenchError(f"occupancy target {target:.3f} not reached")


def _make_policy(name: str, n_agents: int, seed: int):
    if name == "frontier":
        return FrontierPolicy(n_agents, seed=seed)
    if name == "random":
        return RandomPolicy(n_agents, seed=seed)
    raise BenchError(f"unknown policy {name!r}")


def replay(world: World, policy_name: str, seed: int, n_agents: int = 4,
           max_steps: int = 20000, episode: int = 0) -> EpisodeLog:
    """Run one policy episode on a prepared world (fresh agent spawn)."""
    world.spawn_agents(n_agents, np.random.default_rng([seed, 3]))
    runner = EpisodeRunner(world, max_steps=max_steps, episode=episode)
    policy = _make_policy(policy_name, n_agents, _derive_seed(seed, 4))
    return run_episode(runner, policy)


def run_trial(spec: BenchSpec, condition_index: int, trial: int) -> EpisodeLog:
    condition = spec.conditions[condition_index]
    seed = _derive_seed(spec.seed, condition_index, trial)
    world = generate_map(spec.width, spec.height, seed,
                         n_obstacles=condition.n_obstacles,
                         occupancy=condition.occupancy, p_l=condition.p_l)
    return replay(world, spec.policy, seed, n_agents=spec.n_agents,
                  max_steps=spec.max_steps, episode=trial)


def _run_trial_args(args) -> tuple[int, int, EpisodeLog]:
    spec, ci, trial = args
    return ci, trial, run_trial(spec, ci, trial)


def run_bench(spec: BenchSpec, out_dir: str | Path) -> Path:
    """Execute all trials, write raw and aggregate CSVs plus one SVG per
    metric; returns the aggregate CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, ci, t) for ci in range(len(spec.conditions))
            for t in range(spec.trials)]
    results: dict[tuple[int, int], EpisodeLog] = {}
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for ci, t, log in pool.map(_run_trial_args, jobs):
                results[(ci, t)] = log
    else:
        for args in jobs:
            ci, t, log = _run_trial_args(args)
            results[(ci, t)] = log

    per_condition: dict[str, list[EpisodeLog]] = {}
    for ci, condition in enumerate(spec.conditions):
        logs = []
        for t in range(spec.trials):
            log = results.get((ci, t))
            if log is None:
                continue
            log.save(out / f"raw_{condition.label}_trial{t}.csv")
            logs.append(log)
        per_condition[condition.label] = logs

    aggregate = aggregate_rows(spec, per_condition)
    agg_path = out / "aggregate.csv"
    write_aggregate_csv(aggregate, agg_path)
    for metric in METRICS:
        (out / f"{metric}.svg").write_text(
            render_metric_svg(aggregate, metric))
    return agg_path


def aggregate_rows(spec: BenchSpec,
                   per_condition: dict[str, list[EpisodeLog]]) -> list[tuple]:
    rows: list[tuple] = []
    for condition in spec.conditions:
        logs = per_condition.get(condition.label, [])
        if len(logs) < 2:
            logger.warning("condition %s degenerate: %d usable trials",
                           condition.label, len(logs))
        samples = [checkpoint_values(log, spec.checkpoints) for log in logs]
        for cp in spec.checkpoints:
            for mi, metric in enumerate(METRICS):
                values = [s[cp][mi] for s in samples]
                mean, lo, hi = student_t_ci(values)
                rows.append((condition.label, cp, metric, mean, lo, hi))
    return rows


def write_aggregate_csv(rows: Iterable[tuple], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["condition", "checkpoint", "metric",
                         "mean", "ci_lo", "ci_hi"])
        writer.writerows(rows)


def read_aggregate_csv(path: str | Path) -> list[tuple]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append((rec["condition"], int(rec["checkpoint"]),
                         rec["metric"], float(rec["mean"]),
                         float(rec["ci_lo"]), float(rec["ci_hi"])))
    return rows


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#e377c2", "#7f7f7f")


def render_metric_svg(rows: Sequence[tuple], metric: str,
                      width: int = 640, height: int = 400) -> str:
    """Line chart with shaded interval bands, one series per condition."""
    series: dict[str, list[tuple[int, float, float, float]]] = {}
    for cond, cp, m, mean, lo, hi in rows:
        if m != metric or not math.isfinite(mean):
            continue
        band_lo = lo if math.isfinite(lo) else mean
        band_hi = hi if math.isfinite(hi) else mean
        series.setdefault(cond, []).append((cp, mean, band_lo, band_hi))

    pad_l, pad_r, pad_t, pad_b = 56, 16, 24, 44
    plot_w, plot_h = width - pad_l - pad_r, height - pad_t - pad_b
    xs = [p[0] for pts in series.values() for p in pts] or [0, 1]
    ys = ([v for pts in series.values() for p in pts for v in p[1:]] or [0, 1])
    x_min, x_max = min(xs), max(xs) or 1
    y_min, y_max = min(0.0, min(ys)), max(ys) or 1.0
    if x_max == x_min:
        x_max = x_min + 1
    if y_max == y_min:
        y_max = y_min + 1

    def sx(x: float) -> float:
        return pad_l + plot_w * (x - x_min) / (x_max - x_min)

    def sy(y: float) -> float:
        return pad_t + plot_h * (1.0 - (y - y_min) / (y_max - y_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad_l}" y1="{pad_t + plot_h}" x2="{pad_l + plot_w}" '
        f'y2="{pad_t + plot_h}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" '
        f'y2="{pad_t + plot_h}" stroke="black"/>',
    ]
    for i in range(5):
        xv = x_min + (x_max - x_min) * i / 4
        yv = y_min + (y_max - y_min) * i / 4
        parts.append(f'<text x="{sx(xv):.1f}" y="{pad_t + plot_h + 16}" '
                     f'font-size="11" text-anchor="middle">{xv:g}</text>')
        parts.append(f'<text x="{pad_l - 6}" y="{sy(yv) + 4:.1f}" '
                     f'font-size="11" text-anchor="end">{yv:g}</text>')
    parts.append(f'<text x="{pad_l + plot_w / 2:.1f}" y="{height - 8}" '
                 f'font-size="12" text-anchor="middle">observations</text>')
    parts.append(f'<text x="{pad_l + plot_w / 2:.1f}" y="14" font-size="12" '
                 f'text-anchor="middle">{metric} vs observations</text>')

    for idx, (cond, pts) in enumerate(sorted(series.items())):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        pts = sorted(pts)
        band = (" ".join(f"{sx(x):.2f},{sy(hi):.2f}" for x, _, _, hi in pts)
                + " " + " ".join(f"{sx(x):.2f},{sy(lo):.2f}"
                                 for x, _, lo, _ in reversed(pts)))
        line = " ".join(f"{sx(x):.2f},{sy(mean):.2f}" for x, mean, _, _ in pts)
        parts.append(f'<polygon points="{band}" fill="{color}" '
                     f'fill-opacity="0.18" stroke="none"/>')
        parts.append(f'<polyline points="{line}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = pad_t + 14 + 14 * idx
        parts.append(f'<line x1="{pad_l + plot_w - 120}" y1="{ly - 4}" '
                     f'x2="{pad_l + plot_w - 100}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{pad_l + plot_w - 96}" y="{ly}" '
                     f'font-size="11">{cond}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
