import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { DEFAULT_CONFIG, Trainer } from '../src/a2c.js'
import { EnvClient, spawnEnvServer, type ServerHandle } from '../src/client.js'
import { meanCi, policyActor, randomActor, runEpisode } from '../src/evaluate.js'
import { ActorCritic } from '../src/model.js'
import { Rng } from '../src/rng.js'

// End-to-end learning signal on the small open arena: an agent pair trained
// from scratch must beat the random baseline with non-overlapping 95%
// confidence intervals over ten held-out evaluation seeds, inside a
// 30-minute wall-clock budget. Fully seeded, so the outcome is
// deterministic run to run.
//
// Evaluation samples from the trained policy (the quantity the objective
// optimizes) rather than taking greedy means: the arena boundary has no
// sensor channel, so a deterministic drift can pin an agent against a
// wall it cannot perceive — an observability artifact, not a learning
// failure.

const WALL_BUDGET_S = 1800
const TRAIN_STEPS = 30_720
const EVAL_SEEDS = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
const PARAMS = {
  stage: 1,
  n_agents: 2,
  p_l: 0,
  n_obstacles: 0,
  width: 50,
  height: 50,
  max_steps: 400,
}

let server: ServerHandle

beforeAll(async () => {
  server = await spawnEnvServer()
}, 60_000)

afterAll(async () => {
  await server.stop()
})

describe('learning signal', () => {
  it(
    'trained policy beats the random baseline with separated CIs',
    async () => {
      const t0 = Date.now()

      const cfg = {
        ...DEFAULT_CONFIG,
        batchSize: 256,
        bufferSize: 1024,
        maxEpisodeSteps: PARAMS.max_steps,
        rewardScale: 0.01,
      }
      const model = new ActorCritic(PARAMS.n_agents, new Rng(7))
      const client = await EnvClient.connect(server.host, server.port)
      let nextSeed = 1000
      const trainer = new Trainer(model, client, cfg, new Rng(8), {
        resetParams: PARAMS,
        seedStream: () => nextSeed++,
      })
      trainer.onProgress = (s) => {
        console.log(
          `steps ${s.envSteps}  updates ${s.updates}  episodes ${s.episodes}  ` +
            `rollout return ${s.meanReturn.toFixed(1)}  loss ${s.loss.toFixed(2)}  ` +
            `grad norm ${s.gradNorm.toFixed(2)}`,
        )
      }
      await trainer.train(TRAIN_STEPS)
      await client.close()
      console.log(`training done in ${((Date.now() - t0) / 1000).toFixed(1)} s`)

      const evalClient = await EnvClient.connect(server.host, server.port)
      const trainedReturns: number[] = []
      const randomReturns: number[] = []
      for (const seed of EVAL_SEEDS) {
        const tr = await runEpisode(
          evalClient,
          policyActor(model, new Rng(555 + seed)),
          { seed, ...PARAMS },
          PARAMS.n_agents,
        )
        const rr = await runEpisode(
          evalClient,
          randomActor(PARAMS.n_agents, new Rng(1234 + seed)),
          { seed, ...PARAMS },
          PARAMS.n_agents,
        )
        trainedReturns.push(tr.totalReturn)
        randomReturns.push(rr.totalReturn)
        console.log(
          `seed ${seed}: trained ${tr.totalReturn.toFixed(1)} ` +
            `(${tr.steps} steps, completed=${tr.completed})  random ${rr.totalReturn.toFixed(1)}`,
        )
      }
      await evalClient.close()

      const trained = meanCi(trainedReturns)
      const random = meanCi(randomReturns)
      const elapsedS = (Date.now() - t0) / 1000
      const separated = trained.lo > random.hi
      const inBudget = elapsedS < WALL_BUDGET_S
      console.log(
        `learning check: ${separated && inBudget ? 'PASS' : 'FAIL'} ` +
          `(trained ${trained.mean.toFixed(1)} [${trained.lo.toFixed(1)}, ${trained.hi.toFixed(1)}] ` +
          `vs random ${random.mean.toFixed(1)} [${random.lo.toFixed(1)}, ${random.hi.toFixed(1)}] ` +
          `over ${EVAL_SEEDS.length} seeds; ${(elapsedS / 60).toFixed(1)} min of ${WALL_BUDGET_S / 60})`,
      )

      for (const v of [...trainedReturns, ...randomReturns]) {
        expect(Number.isFinite(v)).toBe(true)
      }
      expect(trained.lo).toBeGreaterThan(random.hi)
      expect(elapsedS).toBeLessThan(WALL_BUDGET_S)
    },
    2_100_000,
  )
})
