export { Rng } from './rng.js'
export {
  GRID_SIZE,
  GRID_CHANNELS,
  CH_AGENT,
  CH_OBSERVED,
  CH_UNOBSERVED,
  CH_OBSTACLE,
  WireFormatError,
  diskMask,
  diskCellCount,
  decodeGrid,
  encodeGrid,
} from './wire.js'
export type {
  ChannelRuns,
  GridRuns,
  EpisodeInfo,
  ObsFrame,
  StepResFrame,
  ErrFrame,
  ByeFrame,
  ServerFrame,
  WireAction,
  ResetParams,
} from './wire.js'
export { EnvClient, GatewayError, spawnEnvServer } from './client.js'
export type { ServerHandle } from './client.js'
export { Param, Conv2d, Dense, Swish, Adam, sigmoid, softplus } from './nn.js'
export {
  ACTION_BOUNDS,
  ACTION_DIM,
  FEATURE_DIM,
  ActorCritic,
  squash,
  logProbMove,
  logProbComm,
  entropyMove,
  entropyComm,
  toWireAction,
} from './model.js'
export {
  GRID_FLAT,
  DEFAULT_CONFIG,
  validateConfig,
  discountedReturns,
  lossAndGrad,
  rolloutToBatch,
  sliceBatch,
  Collector,
  Trainer,
} from './a2c.js'
export type {
  TrainerConfig,
  Batch,
  LossParts,
  Rollout,
  PresenceFn,
  CollectorOptions,
  TrainStats,
} from './a2c.js'
export {
  meanCi,
  randomActor,
  policyActor,
  runEpisode,
  checkpointMetrics,
  aggregateRows,
  toAggregateCsv,
} from './evaluate.js'
export type { Ci, Actor, EpisodeResult, AggregateRow } from './evaluate.js'
