"""Multi-agent exploration over landmark complexes.

A 2-D disk-agent simulator in which a fleet maps an arena by observing
sparse landmark beacons, maintains the co-visibility simplicial complex as
its shared world model, and synchronizes it through a metered client-server
protocol. Ships scripted frontier/random baselines, a staged environment
generator, a reward engine, a benchmark harness, and line-JSON services for
external policies.
"""

from .bench import (BenchError, BenchSpec, Condition, aggregate_rows,
                    checkpoint_values, generate_map, read_aggregate_csv,
                    render_metric_svg, replay, run_bench, student_t_ci,
                    write_aggregate_csv)
from .complex import (ComplexError, EmptyObservationError, InsertionDelta,
                      InsertionRecord, InvalidSimplexError, LandmarkComplex,
                      UnknownVertexError, VersionError, canonical_simplex)
from .curriculum import (CurriculumState, EpisodeConfig, sample_obstacles,
                         schedule)
from .episode import (MAX_EPISODE_STEPS, EpisodeLog, EpisodeRunner,
                      StepResult, build_world, run_episode)
from .gateway import (EnvSession, GatewayError, SyncSession, handle_line,
                      serve_stdio, serve_tcp)
from .placement import (PlacementConfig, coverage_check, destroy_landmarks,
                        place_landmarks)
from .policies import (FrontierPolicy, RandomPolicy, frontier_vertices,
                       select_targets)
from .rewards import (DEFAULT_WEIGHTS, RewardBreakdown, RewardWeights,
                      step_rewards)
from .sync import (MalformedObservationError, StaleVersionError, SyncClient,
                   SyncDelta, SyncError, SyncRequest, SyncServer,
                   UnknownAgentError)
from .wire import WireError, decode_grid, disk_mask, dumps, encode_grid, loads
from .world import (CH_AGENT, CH_OBSERVED, CH_OBSTACLE, CH_UNOBSERVED, Action,
                    ActionCountError, AgentState, LandmarkInstance, Obstacle,
                    SensorReading, SpawnError, World, WorldConfig, WorldError,
                    segment_blocked, segments_blocked)

__version__ = "0.1.0"

__all__ = [
    "Action", "ActionCountError", "AgentState", "BenchError", "BenchSpec",
    "CH_AGENT", "CH_OBSERVED", "CH_OBSTACLE", "CH_UNOBSERVED", "ComplexError",
    "Condition", "CurriculumState", "DEFAULT_WEIGHTS",
    "EmptyObservationError", "EnvSession", "EpisodeConfig", "EpisodeLog",
    "EpisodeRunner", "FrontierPolicy", "GatewayError", "InsertionDelta",
    "InsertionRecord", "InvalidSimplexError", "LandmarkComplex",
    "LandmarkInstance", "MAX_EPISODE_STEPS", "MalformedObservationError",
    "Obstacle", "PlacementConfig", "RandomPolicy", "RewardBreakdown",
    "RewardWeights", "SensorReading", "SpawnError", "StaleVersionError",
    "StepResult", "SyncClient", "SyncDelta", "SyncError", "SyncRequest",
    "SyncServer", "SyncSession", "UnknownAgentError", "UnknownVertexError",
    "VersionError", "WireError", "World", "WorldConfig", "WorldError",
    "aggregate_rows", "build_world", "canonical_simplex", "checkpoint_values",
    "coverage_check", "decode_grid", "destroy_landmarks", "disk_mask",
    "dumps", "encode_grid", "frontier_vertices", "generate_map",
    "handle_line", "loads",
    "place_landmarks", "read_aggregate_csv", "render_metric_svg", "replay",
    "run_bench", "run_episode", "sample_obstacles", "schedule",
    "segment_blocked", "segments_blocked", "select_targets", "serve_stdio",
    "serve_tcp", "step_rewards", "student_t_ci", "write_aggregate_csv",
]
