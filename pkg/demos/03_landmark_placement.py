"""Place landmark beacons so every free spot can see one, then break some.

Placement runs a coarse-to-fine greedy sweep: at each radius in the
filtration it repeatedly drops a beacon on the spot that covers the most
still-uncovered free cells, so large disks rough out the arena and small
ones patch corners the walls carve up. A destruction draw then knocks out
each beacon independently, which is how the sparse-landmark stages are
built.
"""

import numpy as np

from lcsim import (Obstacle, PlacementConfig, World, WorldConfig,
                   coverage_check, destroy_landmarks, place_landmarks)

world = World(WorldConfig(width=80.0, height=80.0),
              obstacles=[Obstacle(20.0, 20.0, 10.0, 40.0),
                         Obstacle(50.0, 10.0, 12.0, 30.0)])

landmarks = place_landmarks(world, PlacementConfig())
print(f"{len(landmarks)} beacons cover an 80x80 arena with two walls:")
for lm in landmarks:
    print(f"  beacon {lm.id} at ({lm.x:5.1f}, {lm.y:5.1f})")

holes = coverage_check(world, landmarks, radius=15.0)
print(f"\nuncovered free cells at the finest radius: {len(holes)}")

rng = np.random.default_rng(1)
kept, destroyed = destroy_landmarks(landmarks, p_l=0.25, rng=rng)
print(f"\ndestruction draw with p_l=0.25 removed {len(destroyed)} beacons: "
      f"{sorted(lm.id for lm in destroyed)}")
holes = coverage_check(world, landmarks, radius=15.0)
print(f"coverage holes opened up by the loss: {len(holes)}")
