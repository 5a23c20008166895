/**
 * Actor-critic network for grid observations.
 *
 * Each agent's 31x31x4 sensor grid goes through two stride-2 convolutions
 * (3x3 kernels, 16 then 32 channels), is flattened to 2048 features, and
 * fed to a two-layer 256-unit Swish trunk. A shared policy head emits a
 * Gaussian over (vx, vy, wz) — squashed to the simulator's velocity bounds
 * with tanh — plus a Bernoulli logit for the communicate flag. The critic
 * is centralized: it scores the whole team from the concatenation of every
 * agent's trunk features, with absent agents zero-masked.
 */

import { Conv2d, Dense, Param, Swish, sigmoid, softplus } from './nn.js'
import { Rng } from './rng.js'
import { GRID_CHANNELS, GRID_SIZE } from './wire.js'
import type { WireAction } from './wire.js'

/** Simulator clamps linear velocity to ±2 m/s and angular to ±π rad/s. */
export const ACTION_BOUNDS = [2.0, 2.0, Math.PI] as const
export const ACTION_DIM = 3

export const FEATURE_DIM = 256

const LOG_SQRT_2PI = 0.5 * Math.log(2 * Math.PI)

export interface AgentHeadOut {
  /** Gaussian means, [n, ACTION_DIM]. */
  mu: Float64Array
  /** Bernoulli logits, [n]. */
  commLogit: Float64Array
}

export class ActorCritic {
  readonly nAgents: number
  readonly conv1: Conv2d
  readonly conv2: Conv2d
  readonly fc1: Dense
  readonly fc2: Dense
  readonly muHead: Dense
  readonly commHead: Dense
  readonly logStd: Param
  readonly criticFc1: Dense
  readonly criticFc2: Dense

  private actEnc1 = new Swish()
  private actEnc2 = new Swish()
  private actTrunk1 = new Swish()
  private actTrunk2 = new Swish()
  private criticSwish = new Swish()

  constructor(nAgents: number, rng: Rng) {
    if (nAgents <= 0) throw new Error('nAgents must be positive')
    this.nAgents = nAgents
    this.conv1 = new Conv2d('conv1', GRID_CHANNELS, 16, GRID_SIZE, GRID_SIZE, rng)
    this.conv2 = new Conv2d('conv2', 16, 32, this.conv1.outH, this.conv1.outW, rng)
    this.fc1 = new Dense('fc1', this.conv2.outSize, FEATURE_DIM, rng)
    this.fc2 = new Dense('fc2', FEATURE_DIM, FEATURE_DIM, rng)
    this.muHead = new Dense('muHead', FEATURE_DIM, ACTION_DIM, rng)
    this.commHead = new Dense('commHead', FEATURE_DIM, 1, rng)
    // small policy-head init: the untrained greedy policy starts near rest
    // instead of drifting in an arbitrary direction (the arena boundary is
    // invisible to the sensor channels, so an unlucky initial drift pins
    // the agent against a wall it cannot perceive)
    for (let i = 0; i < this.muHead.w.data.length; i++) this.muHead.w.data[i] *= 0.01
    for (let i = 0; i < this.commHead.w.data.length; i++) this.commHead.w.data[i] *= 0.01
    this.logStd = new Param('logStd', ACTION_DIM)
    this.logStd.data.fill(-0.5)
    this.criticFc1 = new Dense('criticFc1', nAgents * FEATURE_DIM, FEATURE_DIM, rng)
    this.criticFc2 = new Dense('criticFc2', FEATURE_DIM, 1, rng)
  }

  params(): Param[] {
    return [
      ...this.conv1.params(),
      ...this.conv2.params(),
      ...this.fc1.params(),
      ...this.fc2.params(),
      ...this.muHead.params(),
      ...this.commHead.params(),
      this.logStd,
      ...this.criticFc1.params(),
      ...this.criticFc2.params(),
    ]
  }

  /**
   * Encoder + trunk for a batch of n agent grids ([n, 4*31*31] flat).
   * Layer caches are retained, so one backward may follow one forward.
   */
  features(grids: Float64Array, n: number): Float64Array {
    let h = this.conv1.forward(grids, n)
    h = this.actEnc1.forward(h)
    h = this.conv2.forward(h, n)
    h = this.actEnc2.forward(h)
    h = this.fc1.forward(h, n)
    h = this.actTrunk1.forward(h)
    h = this.fc2.forward(h, n)
    h = this.actTrunk2.forward(h)
    return h
  }

  /** Backward through trunk + encoder (inverse of features()). */
  featuresBackward(dFeats: Float64Array): void {
    let d = this.actTrunk2.backward(dFeats)
    d = this.fc2.backward(d)
    d = this.actTrunk1.backward(d)
    d = this.fc1.backward(d)
    d = this.actEnc2.backward(d)
    d = this.conv2.backward(d)
    d = this.actEnc1.backward(d)
    this.conv1.backward(d)
  }

  /** Policy heads over trunk features ([n, FEATURE_DIM]). */
  heads(feats: Float64Array, n: number): AgentHeadOut {
    return {
      mu: this.muHead.forward(feats, n),
      commLogit: this.commHead.forward(feats, n),
    }
  }

  /**
   * Centralized value of t timesteps from masked concatenated features
   * ([t, nAgents*FEATURE_DIM]). Returns [t].
   */
  value(concat: Float64Array, t: number): Float64Array {
    let h = this.criticFc1.forward(concat, t)
    h = this.criticSwish.forward(h)
    return this.criticFc2.forward(h, t)
  }

  /** Backward through the critic; returns gradient w.r.t. the concat input. */
  valueBackward(dV: Float64Array): Float64Array {
    let d = this.criticFc2.backward(dV)
    d = this.criticSwish.backward(d)
    return this.criticFc1.backward(d)
  }

  /** Serialize all weights (shape-checked on load). */
  saveState(): Record<string, number[]> {
    const out: Record<string, number[]> = {}
    for (const p of this.params()) out[p.name] = Array.from(p.data)
    return out
  }

  loadState(state: Record<string, number[]>): void {
    for (const p of this.params()) {
      const vals = state[p.name]
      if (!vals || vals.length !== p.data.length) {
        throw new Error(`checkpoint tensor ${p.name} missing or wrong size`)
      }
      p.data.set(vals)
    }
  }
}

/** Squash a pre-activation action to simulator bounds. */
export function squash(z: Float64Array, offset = 0): { vx: number; vy: number; wz: number } {
  return {
    vx: ACTION_BOUNDS[0] * Math.tanh(z[offset]),
    vy: ACTION_BOUNDS[1] * Math.tanh(z[offset + 1]),
    wz: ACTION_BOUNDS[2] * Math.tanh(z[offset + 2]),
  }
}

/**
 * Log-density of the squashed action expressed at the pre-squash point z:
 * Gaussian log-density minus the tanh/scale change-of-variables term,
 * using log(1 - tanh(z)^2) = 2(log 2 - z - softplus(-2z)) for stability.
 */
export function logProbMove(
  z: Float64Array,
  zOff: number,
  mu: Float64Array,
  muOff: number,
  logStd: Float64Array,
): number {
  let lp = 0
  for (let j = 0; j < ACTION_DIM; j++) {
    const s = Math.exp(logStd[j])
    const d = (z[zOff + j] - mu[muOff + j]) / s
    lp += -0.5 * d * d - logStd[j] - LOG_SQRT_2PI
    lp -= Math.log(ACTION_BOUNDS[j]) + 2 * (Math.LN2 - z[zOff + j] - softplus(-2 * z[zOff + j]))
  }
  return lp
}

/** Bernoulli log-density from a logit: comm*l - softplus(l). */
export function logProbComm(logit: number, comm: number): number {
  return comm * logit - softplus(logit)
}

/** Entropy of the pre-squash Gaussian: sum(logStd) + dim/2 * log(2πe). */
export function entropyMove(logStd: Float64Array): number {
  let h = ACTION_DIM * (LOG_SQRT_2PI + 0.5)
  for (let j = 0; j < ACTION_DIM; j++) h += logStd[j]
  return h
}

/** Bernoulli entropy from a logit; dH/dlogit = -logit * p * (1 - p). */
export function entropyComm(logit: number): number {
  const p = sigmoid(logit)
  return p * softplus(-logit) + (1 - p) * softplus(logit)
}

/** Convert a pre-squash sample + comm draw to the wire action object. */
export function toWireAction(z: Float64Array, offset: number, comm: boolean): WireAction {
  const { vx, vy, wz } = squash(z, offset)
  return { vx, vy, wz, comm }
}
