/**
 * End-to-end toy training run against a locally spawned simulator.
 *
 * Trains the actor-critic on a small open arena, then evaluates the
 * trained policy against a uniform-random one over held-out seeds and
 * writes the comparison as a bench-format aggregate CSV plus a weight
 * checkpoint.
 *
 * Run with: npm run train-toy -- --steps 30720 --out out/
 */

import * as fs from 'node:fs'
import * as path from 'node:path'
import { parseArgs } from 'node:util'
import { DEFAULT_CONFIG, Trainer } from './a2c.js'
import { EnvClient, spawnEnvServer } from './client.js'
import {
  aggregateRows,
  meanCi,
  policyActor,
  randomActor,
  runEpisode,
  toAggregateCsv,
} from './evaluate.js'
import { ActorCritic } from './model.js'
import { Rng } from './rng.js'

const EVAL_SEEDS = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
const CHECKPOINTS = [10, 25, 50, 100, 200]

async function main() {
  const { values } = parseArgs({
    options: {
      steps: { type: 'string', default: '30720' },
      agents: { type: 'string', default: '2' },
      arena: { type: 'string', default: '50' },
      'max-episode-steps': { type: 'string', default: '400' },
      seed: { type: 'string', default: '7' },
      out: { type: 'string', default: 'out' },
    },
  })
  const steps = Number(values.steps)
  const nAgents = Number(values.agents)
  const arena = Number(values.arena)
  const maxSteps = Number(values['max-episode-steps'])
  const seed = Number(values.seed)
  const outDir = values.out!

  console.log(`spawning environment server...`)
  const server = await spawnEnvServer()
  const client = await EnvClient.connect(server.host, server.port)
  console.log(`connected to ${server.host}:${server.port}`)

  const rng = new Rng(seed)
  const model = new ActorCritic(nAgents, rng)
  const cfg = {
    ...DEFAULT_CONFIG,
    batchSize: 256,
    bufferSize: 1024,
    maxEpisodeSteps: maxSteps,
    rewardScale: 0.01,
  }
  const episodeParams = {
    stage: 1,
    n_agents: nAgents,
    p_l: 0,
    n_obstacles: 0,
    width: arena,
    height: arena,
    max_steps: maxSteps,
  }
  let trainSeed = 1000
  const trainer = new Trainer(model, client, cfg, rng, {
    resetParams: episodeParams,
    seedStream: () => trainSeed++,
  })
  trainer.onProgress = (s) => {
    console.log(
      `steps ${s.envSteps}  episodes ${s.episodes}  ` +
        `return ${s.meanReturn.toFixed(1)}  loss ${s.loss.toFixed(3)}  |g| ${s.gradNorm.toFixed(2)}`,
    )
  }

  console.log(`training for ${steps} environment steps (${nAgents} agents, ${arena}x${arena})...`)
  const t0 = Date.now()
  await trainer.train(steps)
  console.log(`trained in ${((Date.now() - t0) / 1000).toFixed(0)}s`)

  console.log(`\nevaluating on ${EVAL_SEEDS.length} held-out seeds...`)
  const random = randomActor(nAgents, new Rng(seed + 1))
  const trainedReturns: number[] = []
  const randomReturns: number[] = []
  const trainedTrails = []
  const randomTrails = []
  for (const s of EVAL_SEEDS) {
    // sample from the trained policy (the quantity training optimizes);
    // greedy means can pin agents against the sensor-invisible boundary
    const trained = policyActor(model, new Rng(555 + s))
    const a = await runEpisode(client, trained, { seed: s, ...episodeParams }, nAgents)
    const b = await runEpisode(client, random, { seed: s, ...episodeParams }, nAgents)
    trainedReturns.push(a.totalReturn)
    randomReturns.push(b.totalReturn)
    trainedTrails.push(a.infoTrail)
    randomTrails.push(b.infoTrail)
    console.log(`  seed ${s}: trained ${a.totalReturn.toFixed(1)}  random ${b.totalReturn.toFixed(1)}`)
  }
  const ciT = meanCi(trainedReturns)
  const ciR = meanCi(randomReturns)
  console.log(`\ntrained return: ${ciT.mean.toFixed(1)} [${ciT.lo.toFixed(1)}, ${ciT.hi.toFixed(1)}]`)
  console.log(`random  return: ${ciR.mean.toFixed(1)} [${ciR.lo.toFixed(1)}, ${ciR.hi.toFixed(1)}]`)

  fs.mkdirSync(outDir, { recursive: true })
  const rows = [
    ...aggregateRows('trained_pl0', CHECKPOINTS, trainedTrails),
    ...aggregateRows('random_pl0', CHECKPOINTS, randomTrails),
  ]
  const csvPath = path.join(outDir, 'toy_eval.csv')
  fs.writeFileSync(csvPath, toAggregateCsv(rows))
  const ckptPath = path.join(outDir, 'toy_checkpoint.json')
  fs.writeFileSync(ckptPath, JSON.stringify(model.saveState()))
  console.log(`\nwrote ${csvPath} and ${ckptPath}`)

  await client.close()
  await server.stop()
}

main().catch((err) => {
  console.error(err)
  process.exit(1)
})
