/**
 * Policy evaluation and result export.
 *
 * Evaluation rows use the same aggregate CSV schema the simulator's bench
 * harness emits (condition, checkpoint, metric, mean, ci_lo, ci_hi), so a
 * trained policy's curves overlay directly on the scripted baselines.
 */

import { ACTION_DIM, ActorCritic, squash } from './model.js'
import { sigmoid } from './nn.js'
import { Rng } from './rng.js'
import { EnvClient } from './client.js'
import {
  GRID_CHANNELS,
  GRID_SIZE,
  decodeGrid,
  type EpisodeInfo,
  type GridRuns,
  type ResetParams,
  type WireAction,
} from './wire.js'

const GRID_FLAT = GRID_CHANNELS * GRID_SIZE * GRID_SIZE

/** Two-sided 95% Student-t quantiles (upper 97.5% point), by dof 1..30. */
const T_97P5: Record<number, number> = {
  1: 12.706204736174705,
  2: 4.302652729749464,
  3: 3.1824463052837095,
  4: 2.7764451051977943,
  5: 2.5705818356363155,
  6: 2.44691185114497,
  7: 2.3646242515927853,
  8: 2.3060041352041667,
  9: 2.2621571627982053,
  10: 2.228138851986275,
  11: 2.2009851600916397,
  12: 2.178812829667229,
  13: 2.1603686564627926,
  14: 2.144786687917804,
  15: 2.1314495455597755,
  16: 2.1199052992212546,
  17: 2.109815577833317,
  18: 2.1009220402410387,
  19: 2.0930240544083096,
  20: 2.085963447265865,
  21: 2.0796138447276804,
  22: 2.0738730679040263,
  23: 2.0686576104190486,
  24: 2.063898561628026,
  25: 2.0595385527532977,
  26: 2.055529438642873,
  27: 2.0518305164802855,
  28: 2.048407141795245,
  29: 2.0452296421327043,
  30: 2.042272456301238,
}

export interface Ci {
  mean: number
  lo: number
  hi: number
}

/** Mean with a 95% Student-t confidence interval (sample stdev, n-1 dof). */
export function meanCi(values: number[]): Ci {
  const n = values.length
  if (n === 0) throw new Error('meanCi of empty sample')
  const mean = values.reduce((s, v) => s + v, 0) / n
  if (n === 1) return { mean, lo: mean, hi: mean }
  const tq = T_97P5[n - 1]
  if (tq === undefined) throw new Error(`no t quantile frozen for dof ${n - 1}`)
  const varSum = values.reduce((s, v) => s + (v - mean) * (v - mean), 0)
  const half = (tq * Math.sqrt(varSum / (n - 1))) / Math.sqrt(n)
  return { mean, lo: mean - half, hi: mean + half }
}

/** A per-step decision maker: grids+mask in, wire actions out. */
export type Actor = (grids: Float64Array, mask: Float64Array) => (WireAction | null)[]

/** Uniform actions over the full velocity bounds, comm a fair coin. */
export function randomActor(nAgents: number, rng: Rng): Actor {
  return (_grids, mask) => {
    const actions: (WireAction | null)[] = []
    for (let a = 0; a < nAgents; a++) {
      if (mask[a] === 0) {
        actions.push(null)
        continue
      }
      actions.push({
        vx: rng.uniform(-2, 2),
        vy: rng.uniform(-2, 2),
        wz: rng.uniform(-Math.PI, Math.PI),
        comm: rng.random() < 0.5,
      })
    }
    return actions
  }
}

/**
 * Greedy actor from a trained network: squashed means, comm when its
 * probability crosses 1/2. Optionally stochastic with a provided rng.
 */
export function policyActor(model: ActorCritic, rng?: Rng): Actor {
  return (grids, mask) => {
    const n = model.nAgents
    const feats = model.features(grids, n)
    const { mu, commLogit } = model.heads(feats, n)
    const actions: (WireAction | null)[] = []
    for (let a = 0; a < n; a++) {
      if (mask[a] === 0) {
        actions.push(null)
        continue
      }
      const z = new Float64Array(ACTION_DIM)
      for (let j = 0; j < ACTION_DIM; j++) {
        z[j] = mu[a * ACTION_DIM + j]
        if (rng) z[j] += Math.exp(model.logStd.data[j]) * rng.normal()
      }
      const { vx, vy, wz } = squash(z)
      const p = sigmoid(commLogit[a])
      const comm = rng ? rng.random() < p : p > 0.5
      actions.push({ vx, vy, wz, comm })
    }
    return actions
  }
}

export interface EpisodeResult {
  /** Undiscounted sum of group + per-agent rewards over the episode. */
  totalReturn: number
  steps: number
  completed: boolean
  /** Info snapshot after every step (plus the reset state at index 0). */
  infoTrail: EpisodeInfo[]
}

function decodeAll(raw: (GridRuns | null)[], n: number): { grids: Float64Array; mask: Float64Array } {
  const grids = new Float64Array(n * GRID_FLAT)
  const mask = new Float64Array(n)
  for (let a = 0; a < n; a++) {
    const runs = raw[a]
    if (runs === null) continue
    grids.set(decodeGrid(runs), a * GRID_FLAT)
    mask[a] = 1
  }
  return { grids, mask }
}

/** Run one full episode under an actor; returns are summed undiscounted. */
export async function runEpisode(
  client: EnvClient,
  actor: Actor,
  params: ResetParams,
  nAgents: number,
): Promise<EpisodeResult> {
  const first = await client.reset(params)
  const infoTrail: EpisodeInfo[] = [first.info]
  if (first.info.done) {
    return { totalReturn: 0, steps: 0, completed: true, infoTrail }
  }
  let { grids, mask } = decodeAll(first.grids, nAgents)
  let totalReturn = 0
  let steps = 0
  for (;;) {
    const res = await client.act(actor(grids, mask))
    totalReturn += res.group
    for (const r of res.rewards) totalReturn += r
    steps += 1
    infoTrail.push(res.info)
    if (res.done || res.trunc) {
      return { totalReturn, steps, completed: res.done, infoTrail }
    }
    ;({ grids, mask } = decodeAll(res.grids!, nAgents))
  }
}

export interface AggregateRow {
  condition: string
  checkpoint: number
  metric: string
  mean: number
  ciLo: number
  ciHi: number
}

const METRICS = ['c0', 'c1', 'c2'] as const

/**
 * Complex-size metrics at observation-count checkpoints, bench-style: the
 * last recorded state with obs_count <= checkpoint (zeros if none).
 */
export function checkpointMetrics(
  trail: EpisodeInfo[],
  checkpoints: number[],
): Record<string, number[]> {
  const out: Record<string, number[]> = { c0: [], c1: [], c2: [] }
  for (const cp of checkpoints) {
    let best: EpisodeInfo | null = null
    for (const info of trail) {
      if (info.obs_count <= cp) best = info
      else break
    }
    out.c0.push(best ? best.c0 : 0)
    out.c1.push(best ? best.c1 : 0)
    out.c2.push(best ? best.c2 : 0)
  }
  return out
}

/** Aggregate per-episode checkpoint metrics into bench-format rows. */
export function aggregateRows(
  condition: string,
  checkpoints: number[],
  trails: EpisodeInfo[][],
): AggregateRow[] {
  const perEpisode = trails.map((trail) => checkpointMetrics(trail, checkpoints))
  const rows: AggregateRow[] = []
  for (let i = 0; i < checkpoints.length; i++) {
    for (const metric of METRICS) {
      const sample = perEpisode.map((m) => m[metric][i])
      const { mean, lo, hi } = meanCi(sample)
      rows.push({ condition, checkpoint: checkpoints[i], metric, mean, ciLo: lo, ciHi: hi })
    }
  }
  return rows
}

/** Serialize rows in the bench aggregate schema (LF line endings). */
export function toAggregateCsv(rows: AggregateRow[]): string {
  const lines = ['condition,checkpoint,metric,mean,ci_lo,ci_hi']
  for (const r of rows) {
    lines.push(`${r.condition},${r.checkpoint},${r.metric},${r.mean},${r.ciLo},${r.ciHi}`)
  }
  return lines.join('\n') + '\n'
}
