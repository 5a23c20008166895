"""Drive disk agents through a walled arena and read their sensor grids.

The world advances in 0.1 s ticks under per-axis velocity clamps. Every
agent carries a 31x31 egocentric grid over a 15 m sensing disk with four
one-hot channels: other agents, landmarks already in the shared map,
landmarks not yet mapped, and obstacle cells. Obstacles occlude landmarks
and other agents but are always drawn themselves.
"""

import numpy as np

from lcsim import (CH_AGENT, CH_OBSERVED, CH_OBSTACLE, CH_UNOBSERVED, Action,
                   LandmarkInstance, Obstacle, World, WorldConfig)

world = World(WorldConfig(width=60.0, height=60.0),
              obstacles=[Obstacle(24.0, 20.0, 6.0, 20.0)])
world.landmarks.extend([
    LandmarkInstance(id=0, x=20.0, y=30.0),
    LandmarkInstance(id=1, x=40.0, y=30.0),   # behind the wall at first
])
world.spawn_agents(2, np.random.default_rng(3))
world.agents[0].x, world.agents[0].y = 12.0, 30.0
world.agents[1].x, world.agents[1].y = 12.0, 44.0

reading = world.sense(0)
print(f"agent 0 at (12, 30) sees landmark ids: {sorted(reading.visible_ids)}")
print("(the wall hides landmark 1 even though it is inside the disk)")

glyphs = {CH_AGENT: "A", CH_OBSERVED: "o", CH_UNOBSERVED: "?",
          CH_OBSTACLE: "#"}


def render(grid: np.ndarray) -> str:
    rows = []
    for r in range(grid.shape[0] - 1, -1, -1):  # y grows upward
        row = ""
        for c in range(grid.shape[1]):
            ch = next((glyphs[k] for k in glyphs if grid[r, c, k]), ".")
            row += ch
        rows.append(row)
    return "\n".join(rows)


print("\nagent 0's grid (A=agent, ?=unmapped landmark, #=obstacle):")
print(render(reading.grid))

print("\nmarch east until the wall stops us...")
hit = False
for _ in range(70):
    (state, hit), _ = world.step([Action(vx=2.0, vy=0.0), None])
print(f"agent 0 pinned at x={world.agents[0].x:.1f} "
      f"(wall face minus its radius), collision flag {hit}")

print("slide north along the wall, then cut east past its top...")
for _ in range(60):
    world.step([Action(vx=0.0, vy=2.0), None])
for _ in range(45):
    world.step([Action(vx=2.0, vy=0.0), None])
reading = world.sense(0)
print(f"agent 0 at ({world.agents[0].x:.1f}, {world.agents[0].y:.1f}) "
      f"now sees: {sorted(reading.visible_ids)}")
