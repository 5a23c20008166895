/**
 * Synchronous advantage actor-critic over the environment wire protocol.
 *
 * One collector fills an on-policy buffer by stepping a live environment
 * session; the learner then makes a single pass over that buffer in
 * timestep-aligned minibatches (the centralized critic needs whole teams),
 * applying one Adam step per minibatch. Advantages are computed once per
 * buffer from the collection-time value estimates and treated as constants
 * inside the loss, so the loss is a pure function of the parameters given
 * a frozen batch — which is what makes the finite-difference gradient
 * check meaningful.
 */

import { EnvClient } from './client.js'
import {
  ACTION_DIM,
  ActorCritic,
  FEATURE_DIM,
  entropyComm,
  entropyMove,
  logProbComm,
  logProbMove,
  toWireAction,
} from './model.js'
import { Adam, sigmoid } from './nn.js'
import { Rng } from './rng.js'
import {
  GRID_CHANNELS,
  GRID_SIZE,
  decodeGrid,
  type GridRuns,
  type ResetParams,
  type WireAction,
} from './wire.js'

export const GRID_FLAT = GRID_CHANNELS * GRID_SIZE * GRID_SIZE

export interface TrainerConfig {
  /** Agent-samples per gradient step. */
  batchSize: number
  /** Agent-samples collected per learner pass. */
  bufferSize: number
  learningRate: number
  /** Return discount, in (0, 1]. */
  discount: number
  maxEpisodeSteps: number
  /** Environment steps per curriculum stage (toy-scale default). */
  stepsPerStage: number
  valueCoef: number
  entropyCoef: number
  maxGradNorm: number
  /**
   * Multiplier applied to team rewards before computing training returns,
   * keeping critic targets at O(1) so Adam's bounded per-coordinate step
   * can actually reach them. Reported episode returns stay unscaled.
   */
  rewardScale: number
}

export const DEFAULT_CONFIG: TrainerConfig = {
  batchSize: 1024,
  bufferSize: 10240,
  learningRate: 3e-4,
  discount: 0.99,
  maxEpisodeSteps: 20000,
  stepsPerStage: 200_000,
  valueCoef: 0.5,
  entropyCoef: 0.01,
  maxGradNorm: 0.5,
  rewardScale: 1,
}

export function validateConfig(cfg: TrainerConfig): void {
  if (cfg.batchSize <= 0 || cfg.bufferSize <= 0) throw new Error('sizes must be positive')
  if (cfg.bufferSize % cfg.batchSize !== 0) {
    throw new Error('bufferSize must be a multiple of batchSize')
  }
  if (!(cfg.discount > 0 && cfg.discount <= 1)) throw new Error('discount must be in (0, 1]')
  if (cfg.learningRate <= 0) throw new Error('learningRate must be positive')
  if (cfg.maxEpisodeSteps <= 0 || cfg.stepsPerStage <= 0) {
    throw new Error('step budgets must be positive')
  }
  if (!(cfg.rewardScale > 0)) throw new Error('rewardScale must be positive')
}

/**
 * A frozen training batch of t timesteps by nAgents rows (row-major:
 * timestep outer, agent inner). Advantages and returns are per timestep;
 * everything else is per agent row.
 */
export interface Batch {
  t: number
  nAgents: number
  /** [t*nAgents, GRID_FLAT] */
  grids: Float64Array
  /** [t*nAgents] 0/1 presence */
  mask: Float64Array
  /** [t*nAgents, ACTION_DIM] pre-squash action samples */
  z: Float64Array
  /** [t*nAgents] 0/1 communicate draws */
  comm: Float64Array
  /** [t] detached advantages */
  adv: Float64Array
  /** [t] discounted team returns */
  returns: Float64Array
}

export interface LossParts {
  loss: number
  policy: number
  value: number
  entropy: number
}

/**
 * Discounted team returns, R_i = r_i + γ R_{i+1}, cut at episode ends.
 *
 * A true terminal (the map is complete) stops the recursion cold. A
 * time-limit truncation is not a fact about the world, so the tail past
 * the cap is bootstrapped from the critic instead of being treated as
 * zero — otherwise returns-to-go shrink toward zero as every episode
 * approaches the cap and, after advantage normalization, that phase ramp
 * drowns the actual reward signal. The protocol withholds the
 * post-truncation observation, so the value at the truncated step stands
 * in for V(s_T) (one step of bias at most).
 */
export function discountedReturns(
  rewards: Float64Array | number[],
  dones: (boolean | number)[],
  truncs: (boolean | number)[],
  values: Float64Array | number[],
  gamma: number,
  bootstrap: number,
): Float64Array {
  const t = rewards.length
  const out = new Float64Array(t)
  let acc = bootstrap
  for (let i = t - 1; i >= 0; i--) {
    if (dones[i]) acc = 0
    else if (truncs[i]) acc = Number(values[i])
    acc = Number(rewards[i]) + gamma * acc
    out[i] = acc
  }
  return out
}

/**
 * Loss of a frozen batch plus analytic gradients, accumulated into the
 * model's parameter grads (caller zeroes them).
 *
 * loss = -(1/Σm) Σ_rows m·A·(logπ_move + logπ_comm)
 *        + valueCoef·(1/t) Σ_t (V - R)²
 *        - entropyCoef·(1/Σm) Σ_rows m·(H_gauss + H_bern)
 */
export function lossAndGrad(model: ActorCritic, batch: Batch, cfg: TrainerConfig): LossParts {
  const { t, nAgents } = batch
  const rows = t * nAgents
  if (nAgents !== model.nAgents) throw new Error('batch/model agent count mismatch')

  const feats = model.features(batch.grids, rows)
  // masked copy doubles as the critic's concatenated input: row (ti, a)
  // occupies concat[ti, a*FEATURE_DIM .. ] in the same memory order
  const masked = new Float64Array(feats.length)
  for (let r = 0; r < rows; r++) {
    if (batch.mask[r] === 0) continue
    masked.set(feats.subarray(r * FEATURE_DIM, (r + 1) * FEATURE_DIM), r * FEATURE_DIM)
  }
  const values = model.value(masked, t)
  const { mu, commLogit } = model.heads(feats, rows)
  const logStd = model.logStd.data

  let maskSum = 0
  for (let r = 0; r < rows; r++) maskSum += batch.mask[r]
  const invMask = maskSum > 0 ? 1 / maskSum : 0

  let policy = 0
  let entropy = 0
  const dMu = new Float64Array(rows * ACTION_DIM)
  const dLogit = new Float64Array(rows)
  const gLogStd = model.logStd.grad
  const hGauss = entropyMove(logStd)

  for (let r = 0; r < rows; r++) {
    if (batch.mask[r] === 0) continue
    const ti = Math.floor(r / nAgents)
    const a = batch.adv[ti]
    const lpM = logProbMove(batch.z, r * ACTION_DIM, mu, r * ACTION_DIM, logStd)
    const lpC = logProbComm(commLogit[r], batch.comm[r])
    policy += -a * (lpM + lpC)

    const coef = -a * invMask
    for (let j = 0; j < ACTION_DIM; j++) {
      const s = Math.exp(logStd[j])
      const d = (batch.z[r * ACTION_DIM + j] - mu[r * ACTION_DIM + j]) / s
      dMu[r * ACTION_DIM + j] = coef * (d / s)
      gLogStd[j] += coef * (d * d - 1)
    }
    const p = sigmoid(commLogit[r])
    dLogit[r] = coef * (batch.comm[r] - p)

    entropy += hGauss + entropyComm(commLogit[r])
    // -entropyCoef * d(H)/d(·): Gaussian entropy is sum(logStd) + const,
    // Bernoulli entropy derivative is -logit·p·(1-p)
    for (let j = 0; j < ACTION_DIM; j++) gLogStd[j] += -cfg.entropyCoef * invMask
    dLogit[r] += cfg.entropyCoef * invMask * commLogit[r] * p * (1 - p)
  }
  policy *= invMask
  entropy *= invMask

  let value = 0
  const dV = new Float64Array(t)
  for (let ti = 0; ti < t; ti++) {
    const err = values[ti] - batch.returns[ti]
    value += err * err
    dV[ti] = (cfg.valueCoef * 2 * err) / t
  }
  value = (cfg.valueCoef * value) / t

  const loss = policy + value - cfg.entropyCoef * entropy

  // heads → feature grads
  const dFeats = model.muHead.backward(dMu)
  const dFeatsComm = model.commHead.backward(dLogit)
  for (let i = 0; i < dFeats.length; i++) dFeats[i] += dFeatsComm[i]
  // critic → masked feature grads (mask gates the flow back to the trunk)
  const dMasked = model.valueBackward(dV)
  for (let r = 0; r < rows; r++) {
    if (batch.mask[r] === 0) continue
    const base = r * FEATURE_DIM
    for (let u = 0; u < FEATURE_DIM; u++) dFeats[base + u] += dMasked[base + u]
  }
  model.featuresBackward(dFeats)

  return { loss, policy, value, entropy }
}

// ---------------------------------------------------------------------------
// rollout collection

interface StepRecord {
  grids: Float64Array
  mask: Float64Array
  z: Float64Array
  comm: Float64Array
  /** Unscaled team reward (group + per-agent sum). */
  reward: number
  /** Collection-time critic value, in reward-scaled units. */
  value: number
  done: boolean
  trunc: boolean
}

export interface Rollout {
  steps: StepRecord[]
  bootstrap: number
  episodeReturns: number[]
}

/** Presence schedule: false simulates a disconnected agent at that step. */
export type PresenceFn = (episodeStep: number, agent: number) => boolean

export interface CollectorOptions {
  resetParams: Omit<ResetParams, 'seed'>
  /** Yields the seed for each new episode. */
  seedStream: () => number
  presence?: PresenceFn
}

/**
 * Steps a live session under the current policy, auto-resetting at episode
 * end, and materializes fixed-length on-policy rollouts.
 */
export class Collector {
  readonly model: ActorCritic
  readonly client: EnvClient
  readonly rng: Rng
  private readonly opts: CollectorOptions
  private grids: Float64Array | null = null
  private mask: Float64Array | null = null
  private episodeStep = 0
  private episodeReturn = 0
  envSteps = 0
  episodesDone = 0

  constructor(model: ActorCritic, client: EnvClient, rng: Rng, opts: CollectorOptions) {
    this.model = model
    this.client = client
    this.rng = rng
    this.opts = opts
  }

  private decodeReadings(raw: (GridRuns | null)[]): { grids: Float64Array; mask: Float64Array } {
    const n = this.model.nAgents
    const grids = new Float64Array(n * GRID_FLAT)
    const mask = new Float64Array(n)
    for (let a = 0; a < n; a++) {
      const runs = raw[a]
      if (runs === null) continue // absent agent: zero grid, zero mask
      grids.set(decodeGrid(runs), a * GRID_FLAT)
      mask[a] = 1
    }
    return { grids, mask }
  }

  private async startEpisode(): Promise<void> {
    const frame = await this.client.reset({
      seed: this.opts.seedStream(),
      ...this.opts.resetParams,
    })
    if (frame.info.done) {
      // degenerate map: everything visible from the spawn poses; skip it
      return this.startEpisode()
    }
    const decoded = this.decodeReadings(frame.grids)
    this.grids = decoded.grids
    this.mask = decoded.mask
    this.episodeStep = 0
    this.episodeReturn = 0
  }

  /** Current-state value under the centralized critic (no grad retained). */
  private stateValue(feats: Float64Array, mask: Float64Array): number {
    const masked = new Float64Array(feats.length)
    for (let a = 0; a < this.model.nAgents; a++) {
      if (mask[a] === 0) continue
      masked.set(feats.subarray(a * FEATURE_DIM, (a + 1) * FEATURE_DIM), a * FEATURE_DIM)
    }
    return this.model.value(masked, 1)[0]
  }

  async collect(tSteps: number): Promise<Rollout> {
    const n = this.model.nAgents
    const steps: StepRecord[] = []
    const episodeReturns: number[] = []
    if (this.grids === null) await this.startEpisode()

    while (steps.length < tSteps) {
      const grids = this.grids!
      const baseMask = this.mask!
      const presence = new Float64Array(n)
      for (let a = 0; a < n; a++) {
        const here = this.opts.presence ? this.opts.presence(this.episodeStep, a) : true
        presence[a] = baseMask[a] && here ? 1 : 0
      }
      const maskedGrids = new Float64Array(n * GRID_FLAT)
      for (let a = 0; a < n; a++) {
        if (presence[a] === 1) {
          maskedGrids.set(grids.subarray(a * GRID_FLAT, (a + 1) * GRID_FLAT), a * GRID_FLAT)
        }
      }

      const feats = this.model.features(maskedGrids, n)
      const { mu, commLogit } = this.model.heads(feats, n)
      const value = this.stateValue(feats, presence)

      const z = new Float64Array(n * ACTION_DIM)
      const comm = new Float64Array(n)
      const actions: (WireAction | null)[] = []
      for (let a = 0; a < n; a++) {
        if (presence[a] === 0) {
          actions.push(null)
          continue
        }
        for (let j = 0; j < ACTION_DIM; j++) {
          z[a * ACTION_DIM + j] =
            mu[a * ACTION_DIM + j] + Math.exp(this.model.logStd.data[j]) * this.rng.normal()
        }
        comm[a] = this.rng.random() < sigmoid(commLogit[a]) ? 1 : 0
        actions.push(toWireAction(z, a * ACTION_DIM, comm[a] === 1))
      }

      const res = await this.client.act(actions)
      let teamReward = res.group
      for (const r of res.rewards) teamReward += r
      const terminal = res.done || res.trunc
      steps.push({
        grids: maskedGrids,
        mask: presence,
        z,
        comm,
        reward: teamReward,
        value,
        done: res.done,
        trunc: res.trunc,
      })
      this.envSteps += 1
      this.episodeStep += 1
      this.episodeReturn += teamReward

      if (terminal) {
        episodeReturns.push(this.episodeReturn)
        this.episodesDone += 1
        await this.startEpisode()
      } else {
        const decoded = this.decodeReadings(res.grids!)
        this.grids = decoded.grids
        this.mask = decoded.mask
      }
    }

    // bootstrap from the state after the last collected step
    let bootstrap = 0
    const last = steps[steps.length - 1]
    if (!last.done && !last.trunc) {
      const feats = this.model.features(this.grids!, n)
      bootstrap = this.stateValue(feats, this.mask!)
    }
    return { steps, bootstrap, episodeReturns }
  }
}

/** Pack a rollout into a frozen batch with normalized advantages. */
export function rolloutToBatch(
  rollout: Rollout,
  nAgents: number,
  gamma: number,
  rewardScale = 1,
): Batch {
  const t = rollout.steps.length
  const grids = new Float64Array(t * nAgents * GRID_FLAT)
  const mask = new Float64Array(t * nAgents)
  const z = new Float64Array(t * nAgents * ACTION_DIM)
  const comm = new Float64Array(t * nAgents)
  const rewards = new Float64Array(t)
  const values = new Float64Array(t)
  const dones: boolean[] = []
  const truncs: boolean[] = []
  for (let ti = 0; ti < t; ti++) {
    const s = rollout.steps[ti]
    grids.set(s.grids, ti * nAgents * GRID_FLAT)
    mask.set(s.mask, ti * nAgents)
    z.set(s.z, ti * nAgents * ACTION_DIM)
    comm.set(s.comm, ti * nAgents)
    rewards[ti] = s.reward * rewardScale
    values[ti] = s.value
    dones.push(s.done)
    truncs.push(s.trunc)
  }
  const returns = discountedReturns(rewards, dones, truncs, values, gamma, rollout.bootstrap)
  const adv = new Float64Array(t)
  let mean = 0
  for (let ti = 0; ti < t; ti++) {
    adv[ti] = returns[ti] - rollout.steps[ti].value
    mean += adv[ti]
  }
  mean /= t
  let varSum = 0
  for (let ti = 0; ti < t; ti++) varSum += (adv[ti] - mean) * (adv[ti] - mean)
  const std = Math.sqrt(varSum / t)
  for (let ti = 0; ti < t; ti++) adv[ti] = (adv[ti] - mean) / (std + 1e-8)
  return { t, nAgents, grids, mask, z, comm, adv, returns }
}

/** Slice a batch to the timestep range [from, to). */
export function sliceBatch(batch: Batch, from: number, to: number): Batch {
  const { nAgents } = batch
  return {
    t: to - from,
    nAgents,
    grids: batch.grids.subarray(from * nAgents * GRID_FLAT, to * nAgents * GRID_FLAT),
    mask: batch.mask.subarray(from * nAgents, to * nAgents),
    z: batch.z.subarray(from * nAgents * ACTION_DIM, to * nAgents * ACTION_DIM),
    comm: batch.comm.subarray(from * nAgents, to * nAgents),
    adv: batch.adv.subarray(from, to),
    returns: batch.returns.subarray(from, to),
  }
}

export interface TrainStats {
  envSteps: number
  updates: number
  episodes: number
  meanReturn: number
  loss: number
  gradNorm: number
}

/**
 * On-policy training driver: collect a buffer, take one pass of minibatch
 * gradient steps over it, repeat until the step budget is spent.
 */
export class Trainer {
  readonly model: ActorCritic
  readonly cfg: TrainerConfig
  readonly optimizer: Adam
  readonly collector: Collector
  onProgress: ((stats: TrainStats) => void) | null = null
  private updates = 0

  constructor(model: ActorCritic, client: EnvClient, cfg: TrainerConfig, rng: Rng, opts: CollectorOptions) {
    validateConfig(cfg)
    this.model = model
    this.cfg = cfg
    this.optimizer = new Adam(model.params(), cfg.learningRate, {
      maxGradNorm: cfg.maxGradNorm,
    })
    this.collector = new Collector(model, client, rng, opts)
  }

  async train(totalEnvSteps: number): Promise<void> {
    const n = this.model.nAgents
    const bufferT = Math.max(1, Math.floor(this.cfg.bufferSize / n))
    const batchT = Math.max(1, Math.floor(this.cfg.batchSize / n))
    const recentReturns: number[] = []
    while (this.collector.envSteps < totalEnvSteps) {
      const rollout = await this.collector.collect(bufferT)
      recentReturns.push(...rollout.episodeReturns)
      while (recentReturns.length > 20) recentReturns.shift()
      const batch = rolloutToBatch(rollout, n, this.cfg.discount, this.cfg.rewardScale)
      let lastLoss = 0
      let lastNorm = 0
      for (let from = 0; from < batch.t; from += batchT) {
        const mb = sliceBatch(batch, from, Math.min(from + batchT, batch.t))
        this.optimizer.zeroGrads()
        const parts = lossAndGrad(this.model, mb, this.cfg)
        lastNorm = this.optimizer.step()
        lastLoss = parts.loss
        this.updates += 1
      }
      if (this.onProgress) {
        const meanReturn =
          recentReturns.length > 0
            ? recentReturns.reduce((s, r) => s + r, 0) / recentReturns.length
            : NaN
        this.onProgress({
          envSteps: this.collector.envSteps,
          updates: this.updates,
          episodes: this.collector.episodesDone,
          meanReturn,
          loss: lastLoss,
          gradNorm: lastNorm,
        })
      }
    }
  }
}
