import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { spawnEnvServer, EnvClient, type ServerHandle } from '../src/client.js'
import { ActorCritic } from '../src/model.js'
import {
  aggregateRows,
  checkpointMetrics,
  meanCi,
  policyActor,
  randomActor,
  runEpisode,
  toAggregateCsv,
} from '../src/evaluate.js'
import { Rng } from '../src/rng.js'
import { GRID_FLAT } from '../src/a2c.js'
import type { EpisodeInfo } from '../src/wire.js'

// ---------------------------------------------------------------------------
// independent quantile oracle: integrate the Student-t density numerically
// and confirm each frozen 97.5% point really leaves 2.5% in the upper tail

const LANCZOS = [
  0.99999999999980993, 676.5203681218851, -1259.1392167224028, 771.32342877765313,
  -176.61502916214059, 12.507343278686905, -0.13857109526572012, 9.9843695780195716e-6,
  1.5056327351493116e-7,
]

function lgamma(x: number): number {
  if (x < 0.5) return Math.log(Math.PI / Math.sin(Math.PI * x)) - lgamma(1 - x)
  const z = x - 1
  let a = LANCZOS[0]
  const t = z + 7.5
  for (let i = 1; i < LANCZOS.length; i++) a += LANCZOS[i] / (z + i)
  return 0.5 * Math.log(2 * Math.PI) + (z + 0.5) * Math.log(t) - t + Math.log(a)
}

function tPdf(nu: number): (x: number) => number {
  const logNorm = lgamma((nu + 1) / 2) - lgamma(nu / 2) - 0.5 * Math.log(nu * Math.PI)
  return (x) => Math.exp(logNorm - ((nu + 1) / 2) * Math.log1p((x * x) / nu))
}

function simpson(f: (x: number) => number, a: number, b: number, fa: number, fb: number) {
  const m = (a + b) / 2
  const fm = f(m)
  return { m, fm, s: ((b - a) / 6) * (fa + 4 * fm + fb) }
}

function adaptiveSimpson(
  f: (x: number) => number,
  a: number,
  b: number,
  fa: number,
  fb: number,
  whole: { m: number; fm: number; s: number },
  tol: number,
  depth: number,
): number {
  const left = simpson(f, a, whole.m, fa, whole.fm)
  const right = simpson(f, whole.m, b, whole.fm, fb)
  const delta = left.s + right.s - whole.s
  if (depth <= 0 || Math.abs(delta) <= 15 * tol) return left.s + right.s + delta / 15
  return (
    adaptiveSimpson(f, a, whole.m, fa, whole.fm, left, tol / 2, depth - 1) +
    adaptiveSimpson(f, whole.m, b, whole.fm, fb, right, tol / 2, depth - 1)
  )
}

function integrate(f: (x: number) => number, a: number, b: number, tol = 1e-13): number {
  const fa = f(a)
  const fb = f(b)
  return adaptiveSimpson(f, a, b, fa, fb, simpson(f, a, b, fa, fb), tol, 50)
}

// frozen table is private to the module; recover it through meanCi with a
// sample of known mean/stdev: [-1, 1]*k has half-width t * k * sqrt(2)/sqrt(2)
function frozenQuantile(dof: number): number {
  const values: number[] = []
  for (let i = 0; i < dof + 1; i++) values.push(i % 2 === 0 ? 1 : -1)
  // mean m, varSum v known in closed form for the alternating +-1 sample
  const n = dof + 1
  const mean = values.reduce((s, x) => s + x, 0) / n
  const varSum = values.reduce((s, x) => s + (x - mean) * (x - mean), 0)
  const ci = meanCi(values)
  return ((ci.hi - ci.mean) * Math.sqrt(n)) / Math.sqrt(varSum / (n - 1))
}

describe('student-t confidence intervals', () => {
  it('frozen 97.5% quantiles leave exactly 2.5% upper-tail mass (dof 1..30)', () => {
    for (let dof = 1; dof <= 30; dof++) {
      const q = frozenQuantile(dof)
      const mass = integrate(tPdf(dof), 0, q)
      // CDF error bounds quantile error by 1/pdf(q); 1e-11 here pins the
      // quantile to ~5e-9 even for the heavy dof=1 tail
      expect(Math.abs(mass - 0.475)).toBeLessThan(1e-11)
    }
  })

  it('computes a textbook interval', () => {
    const { mean, lo, hi } = meanCi([1, 2, 3, 4])
    expect(mean).toBe(2.5)
    const half = (3.1824463052837095 * Math.sqrt(5 / 3)) / 2
    expect(hi - mean).toBeCloseTo(half, 12)
    expect(mean - lo).toBeCloseTo(half, 12)
  })

  it('degenerate and unsupported sample sizes', () => {
    expect(meanCi([7])).toEqual({ mean: 7, lo: 7, hi: 7 })
    expect(() => meanCi([])).toThrow()
    const tooMany = Array.from({ length: 32 }, (_, i) => i)
    expect(() => meanCi(tooMany)).toThrow(/dof 31/)
  })

  it('covers the true mean at the nominal rate on gaussian samples', () => {
    const rng = new Rng(2024)
    let covered = 0
    const trials = 2000
    for (let i = 0; i < trials; i++) {
      const sample = [rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()]
      const { lo, hi } = meanCi(sample)
      if (lo <= 0 && 0 <= hi) covered += 1
    }
    // Binomial(2000, .95) -> sd ~= 0.0049; this window is ~5 sigma
    expect(covered / trials).toBeGreaterThan(0.92)
    expect(covered / trials).toBeLessThan(0.975)
  })
})

function info(partial: Partial<EpisodeInfo>): EpisodeInfo {
  return {
    obs_count: 0,
    c0: 0,
    c1: 0,
    c2: 0,
    comm_counts: [0, 0],
    collisions: 0,
    step_index: 0,
    done: false,
    truncated: false,
    ...partial,
  }
}

describe('checkpoint aggregation', () => {
  const trail = [
    info({ obs_count: 0, c0: 2, c1: 0, c2: 0 }),
    info({ obs_count: 3, c0: 4, c1: 2, c2: 0 }),
    info({ obs_count: 7, c0: 6, c1: 5, c2: 1 }),
    info({ obs_count: 12, c0: 8, c1: 9, c2: 3 }),
  ]

  it('takes the last state within each observation budget', () => {
    const m = checkpointMetrics(trail, [0, 5, 7, 100, -1])
    expect(m.c0).toEqual([2, 4, 6, 8, 0])
    expect(m.c1).toEqual([0, 2, 5, 9, 0])
    expect(m.c2).toEqual([0, 0, 1, 3, 0])
  })

  it('aggregates trails into bench-format rows', () => {
    const other = [
      info({ obs_count: 0, c0: 4, c1: 0, c2: 0 }),
      info({ obs_count: 6, c0: 10, c1: 7, c2: 1 }),
    ]
    const rows = aggregateRows('toy', [7], [trail, other])
    expect(rows).toHaveLength(3)
    expect(rows[0].condition).toBe('toy')
    expect(rows[0].checkpoint).toBe(7)
    expect(rows[0].metric).toBe('c0')
    expect(rows[0].mean).toBe(8) // mean of 6 and 10
    const half = 12.706204736174705 * Math.sqrt(8 / 1) * Math.SQRT1_2
    expect(rows[0].ciHi - rows[0].mean).toBeCloseTo(half, 10)
  })

  it('serializes the exact bench schema with LF endings', () => {
    const rows = aggregateRows('toy', [7], [trail, trail])
    const csv = toAggregateCsv(rows)
    const lines = csv.split('\n')
    expect(lines[0]).toBe('condition,checkpoint,metric,mean,ci_lo,ci_hi')
    expect(csv.includes('\r')).toBe(false)
    expect(csv.endsWith('\n')).toBe(true)
    expect(lines).toHaveLength(5) // header + 3 metric rows + trailing empty
    // identical trails collapse the interval to the mean
    expect(lines[1]).toBe('toy,7,c0,6,6,6')
    const parsed = lines[2].split(',')
    expect(parsed[2]).toBe('c1')
    expect(Number(parsed[3])).toBe(5)
  })
})

describe('actors', () => {
  it('random actions stay in bounds and respect the mask', () => {
    const actor = randomActor(3, new Rng(5))
    const actions = actor(new Float64Array(3 * GRID_FLAT), new Float64Array([1, 0, 1]))
    expect(actions[1]).toBeNull()
    for (const a of [actions[0], actions[2]]) {
      expect(a).not.toBeNull()
      expect(Math.abs(a!.vx)).toBeLessThanOrEqual(2)
      expect(Math.abs(a!.vy)).toBeLessThanOrEqual(2)
      expect(Math.abs(a!.wz!)).toBeLessThanOrEqual(Math.PI)
      expect(typeof a!.comm).toBe('boolean')
    }
  })

  it('greedy policy actions are deterministic', () => {
    const model = new ActorCritic(2, new Rng(3))
    const actor = policyActor(model)
    const grids = new Float64Array(2 * GRID_FLAT)
    grids[4 * 961 + 2 * 961 + 480] = 1 // second agent sees one landmark cell
    const mask = new Float64Array([1, 1])
    const first = actor(grids, mask)
    const second = actor(grids, mask)
    expect(second).toEqual(first)
    expect(first[0]).not.toBeNull()
    expect(Math.abs(first[0]!.vx)).toBeLessThan(2)
  })
})

describe('episode evaluation (live service)', () => {
  let server: ServerHandle

  beforeAll(async () => {
    server = await spawnEnvServer()
  }, 60_000)

  afterAll(async () => {
    await server.stop()
  })

  const TOY = { stage: 1, n_agents: 2, p_l: 0, n_obstacles: 0, width: 50, height: 50 }

  it('runs a truncated episode and records the info trail', async () => {
    const c = await EnvClient.connect(server.host, server.port)
    try {
      const result = await runEpisode(c, randomActor(2, new Rng(1)), { seed: 4, ...TOY, max_steps: 12 }, 2)
      expect(result.steps).toBe(12)
      expect(result.completed).toBe(false)
      expect(result.infoTrail).toHaveLength(13)
      result.infoTrail.forEach((inf, i) => expect(inf.step_index).toBe(i))
      expect(Number.isFinite(result.totalReturn)).toBe(true)

      // same seed, same actor seed -> bit-identical repeat
      const again = await runEpisode(c, randomActor(2, new Rng(1)), { seed: 4, ...TOY, max_steps: 12 }, 2)
      expect(again.totalReturn).toBe(result.totalReturn)
    } finally {
      await c.close()
    }
  })

  it('reports an instantly-complete map as zero-step success', async () => {
    const c = await EnvClient.connect(server.host, server.port)
    try {
      // a 12 m arena is fully sensed from any spawn
      const result = await runEpisode(
        c,
        randomActor(2, new Rng(1)),
        { seed: 0, ...TOY, width: 12, height: 12, max_steps: 12 },
        2,
      )
      expect(result).toMatchObject({ totalReturn: 0, steps: 0, completed: true })
      expect(result.infoTrail).toHaveLength(1)
      expect(result.infoTrail[0].done).toBe(true)
    } finally {
      await c.close()
    }
  })
})
