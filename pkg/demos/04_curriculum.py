"""Walk the three-stage training curriculum.

Stage 1 is an open arena. Stage 2 adds one obstacle every 25 episodes.
Stage 3 keeps that obstacle ramp and layers landmark destruction on top:
p_l climbs 5% -> 25% in 5% steps every 5 episodes, resetting each time an
obstacle arrives. The state object hands out fully-seeded episode configs
so distributed workers can rebuild identical worlds from the episode index
alone.
"""

from lcsim import CurriculumState, schedule

print("stage 3 schedule, first 60 episodes:")
print("  episode  obstacles  p_l")
previous = None
for episode in range(60):
    n_obstacles, p_l = schedule(3, episode)
    marker = ""
    if previous is not None and n_obstacles != previous:
        marker = "   <- new obstacle, p_l resets"
    if episode % 5 == 0 or marker:
        print(f"  {episode:7d}  {n_obstacles:9d}  {p_l:.2f}{marker}")
    previous = n_obstacles

state = CurriculumState(rng_seed=99)
state.advance_stage()  # 1 -> 2
state.advance_stage()  # 2 -> 3
configs = [state.next_episode_config() for _ in range(3)]
print("\nthree consecutive stage-3 episode configs:")
for cfg in configs:
    print(f"  episode {cfg.episode_index}: {cfg.n_obstacles} obstacle(s), "
          f"p_l={cfg.p_l}, world_seed={cfg.world_seed}")
print("\nsame master seed, same worlds: every config is reproducible.")
