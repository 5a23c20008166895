"""Command-line driver: map generation, episode runs, benchmark sweeps,
schedule inspection, and the wire services."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from pathlib import Path

from .bench import BenchSpec, Condition, generate_map, replay, run_bench
from .curriculum import schedule
from .gateway import EnvSession, SyncSession, serve_stdio, serve_tcp
from .sync import SyncServer
from .world import World

logger = logging.getLogger(__name__)


def _parse_checkpoints(text: str) -> tuple[int, ...]:
    """Either "50,100,150" or "50:3000:50" (start:stop:step, stop inclusive)."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("range must be start:stop:step")
        start, stop, step = parts
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(","))


def _load_conditions(path: str) -> tuple[Condition, ...]:
    """JSON list of {"n_obstacles": int | "occupancy": percent, "p_l": float}."""
    items = json.loads(Path(path).read_text())
    conditions = []
    for item in items:
        occupancy = item.get("occupancy")
        conditions.append(Condition(
            p_l=float(item.get("p_l", 0.0)),
            n_obstacles=(int(item["n_obstacles"])
                         if "n_obstacles" in item else None),
            occupancy=None if occupancy is None else float(occupancy) / 100.0))
    return tuple(conditions)


def _cmd_genmap(args) -> int:
    world = generate_map(args.width, args.height, args.seed,
                         n_obstacles=args.obstacles,
                         occupancy=(None if args.occupancy is None
                                    else args.occupancy / 100.0),
                         p_l=args.p_l)
    Path(args.out).write_text(world.to_json())
    live = sum(1 for lm in world.landmarks if not lm.destroyed)
    print(f"occupancy {100.0 * world.occupancy_percentage():.2f}%  "
          f"obstacles {len(world.obstacles)}  landmarks {len(world.landmarks)}"
          f"  live {live}  -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    world = World.from_json(Path(args.world).read_text())
    log = replay(world, args.policy, args.seed, n_agents=args.agents,
                 max_steps=args.max_steps)
    log.save(args.out)
    last = log.rows[-1]
    print(f"steps {last[1]}  obs {last[2]}  c0 {last[3]}  c1 {last[4]}  "
          f"c2 {last[5]}  comm {last[6]}  collisions {last[7]}  -> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    spec = BenchSpec(conditions=_load_conditions(args.conditions),
                     checkpoints=_parse_checkpoints(args.checkpoints),
                     policy=args.policy, trials=args.trials, seed=args.seed,
                     n_agents=args.agents, width=args.width,
                     height=args.height, max_steps=args.max_steps,
                     workers=args.workers)
    agg = run_bench(spec, args.out_dir)
    print(f"aggregate -> {agg}")
    return 0


def _cmd_curriculum(args) -> int:
    stages = [args.stage] if args.stage else [1, 2, 3]
    print("episode,stage,n_obstacles,p_l")
    for stage in stages:
        for episode in range(args.episodes):
            n_obstacles, p_l = schedule(stage, episode, args.n_o, args.n_l)
            print(f"{episode},{stage},{n_obstacles},{p_l}")
    return 0


def _cmd_serve(args) -> int:
    if args.protocol == "env":
        if args.stdio:
            serve_stdio(EnvSession(crediting=args.crediting))
            return 0
        factory = lambda: EnvSession(crediting=args.crediting)  # noqa: E731
    else:
        remaining: list[int] = []
        if args.world:
            world = World.from_json(Path(args.world).read_text())
            remaining = [lm.id for lm in world.landmarks if not lm.destroyed]
        server_state = SyncServer(args.agents, remaining)
        lock = threading.Lock()
        if args.stdio:
            serve_stdio(SyncSession(server_state, lock))
            return 0
        factory = lambda: SyncSession(server_state, lock)  # noqa: E731
    server = serve_tcp(factory, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcsim",
        description="landmark-complex exploration simulator")
    parser.add_argument("--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmap", help="generate a world file")
    p.add_argument("--width", type=float, default=200.0)
    p.add_argument("--height", type=float, default=200.0)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--obstacles", type=int, default=None,
                       help="exact obstacle count")
    group.add_argument("--occupancy", type=float, default=None,
                       help="occupancy target in percent (+-1)")
    p.add_argument("--p-l", type=float, default=0.0, dest="p_l",
                   help="landmark destruction probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_genmap)

    p = sub.add_parser("run", help="run one episode on a world file")
    p.add_argument("--world", required=True)
    p.add_argument("--policy", choices=("frontier", "random"),
                   default="frontier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--out", required=True, help="episode CSV path")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="trial sweep with CI aggregation")
    p.add_argument("--conditions", required=True,
                   help="JSON file of sweep conditions")
    p.add_argument("--checkpoints", default="50:3000:50",
                   help="comma list or start:stop:step")
    p.add_argument("--policy", choices=("frontier", "random"),
                   default="frontier")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--width", type=float, default=200.0)
    p.add_argument("--height", type=float, default=200.0)
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("curriculum", help="print the schedule as CSV")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), default=None,
                   help="single stage (default: all)")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--n-o", type=int, default=25, dest="n_o")
    p.add_argument("--n-l", type=int, default=5, dest="n_l")
    p.set_defaults(func=_cmd_curriculum)

    p = sub.add_parser("serve", help="run a wire service")
    p.add_argument("--protocol", choices=("env", "sync"), default="env")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0,
                   help="0 picks a free port (printed on stdout)")
    p.add_argument("--stdio", action="store_true",
                   help="serve a single session over stdin/stdout")
    p.add_argument("--crediting", choices=("global", "local"),
                   default="global", help="discovery reward attribution")
    p.add_argument("--world", default=None,
                   help="world file for sync completion tracking")
    p.add_argument("--agents", type=int, default=8,
                   help="agent slots for the sync service")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
