/**
 * Wire-protocol types and the run-length grid codec.
 *
 * The environment server speaks one JSON object per line. Sensor grids
 * travel as per-channel [start, length] runs of ones over the row-major
 * enumeration of the cells inside the sensor disk; the disk mask is a pure
 * function of the grid size, so both endpoints derive it independently.
 */

export const GRID_SIZE = 31
export const GRID_CHANNELS = 4

/** Channel indices within a decoded grid. */
export const CH_AGENT = 0
export const CH_OBSERVED = 1
export const CH_UNOBSERVED = 2
export const CH_OBSTACLE = 3

/** One channel's runs: [startCell, runLength] pairs. */
export type ChannelRuns = [number, number][]
/** One agent's grid on the wire: runs per channel. */
export type GridRuns = ChannelRuns[]

export interface EpisodeInfo {
  obs_count: number
  c0: number
  c1: number
  c2: number
  comm_counts: number[]
  collisions: number
  step_index: number
  done: boolean
  truncated: boolean
}

export interface ObsFrame {
  t: 'obs'
  grids: (GridRuns | null)[]
  info: EpisodeInfo
}

export interface StepResFrame {
  t: 'stepres'
  rewards: number[]
  group: number
  done: boolean
  trunc: boolean
  grids: (GridRuns | null)[] | null
  info: EpisodeInfo
}

export interface ErrFrame {
  t: 'err'
  code: string
}

export interface ByeFrame {
  t: 'bye'
}

export type ServerFrame = ObsFrame | StepResFrame | ErrFrame | ByeFrame

export interface WireAction {
  vx: number
  vy: number
  wz?: number
  comm?: boolean
}

export interface ResetParams {
  seed: number
  stage?: number
  n_agents?: number
  p_l?: number
  n_obstacles?: number
  width?: number
  height?: number
  max_steps?: number
}

export class WireFormatError extends Error {}

const maskCache = new Map<number, { flat: Uint8Array; cells: Int32Array }>()

/**
 * Disk mask for a square grid: cell (y, x) is inside when its integer
 * offset from the centre satisfies dy^2 + dx^2 <= k^2 with k = size >> 1.
 *
 * Returns the flat row-major 0/1 mask plus the list of flat indices of
 * in-disk cells in row-major order (the enumeration the runs index into).
 */
export function diskMask(gridSize: number): { flat: Uint8Array; cells: Int32Array } {
  let cached = maskCache.get(gridSize)
  if (cached) return cached
  const k = gridSize >> 1
  const flat = new Uint8Array(gridSize * gridSize)
  const idx: number[] = []
  for (let y = 0; y < gridSize; y++) {
    const dy = y - k
    for (let x = 0; x < gridSize; x++) {
      const dx = x - k
      if (dy * dy + dx * dx <= k * k) {
        flat[y * gridSize + x] = 1
        idx.push(y * gridSize + x)
      }
    }
  }
  cached = { flat, cells: Int32Array.from(idx) }
  maskCache.set(gridSize, cached)
  return cached
}

export function diskCellCount(gridSize: number): number {
  return diskMask(gridSize).cells.length
}

/**
 * Decode wire runs into a dense channels-first Float64Array of shape
 * [channels][gridSize][gridSize]. Cells outside the disk stay zero.
 *
 * Channels-first keeps each channel's plane contiguous, which is the
 * layout the convolution kernels want.
 */
export function decodeGrid(
  runs: GridRuns,
  gridSize: number = GRID_SIZE,
  channels: number = GRID_CHANNELS,
): Float64Array {
  if (runs.length !== channels) {
    throw new WireFormatError(`expected ${channels} channels, got ${runs.length}`)
  }
  const { cells } = diskMask(gridSize)
  const plane = gridSize * gridSize
  const out = new Float64Array(channels * plane)
  for (let c = 0; c < channels; c++) {
    for (const run of runs[c]) {
      if (!Array.isArray(run) || run.length !== 2) {
        throw new WireFormatError('run must be [start, len]')
      }
      const [start, length] = run
      if (length <= 0 || start < 0 || start + length > cells.length) {
        throw new WireFormatError('run out of bounds')
      }
      const base = c * plane
      for (let i = start; i < start + length; i++) {
        out[base + cells[i]] = 1
      }
    }
  }
  return out
}

/**
 * Inverse of decodeGrid, matching the server's encoder: maximal runs of
 * ones per channel over the in-disk cell enumeration.
 */
export function encodeGrid(
  grid: Float64Array,
  gridSize: number = GRID_SIZE,
  channels: number = GRID_CHANNELS,
): GridRuns {
  const { cells } = diskMask(gridSize)
  const plane = gridSize * gridSize
  if (grid.length !== channels * plane) {
    throw new WireFormatError(`grid must have ${channels * plane} entries`)
  }
  const out: GridRuns = []
  for (let c = 0; c < channels; c++) {
    const runs: ChannelRuns = []
    const base = c * plane
    let start = -1
    for (let i = 0; i < cells.length; i++) {
      const on = grid[base + cells[i]] !== 0
      if (on && start < 0) start = i
      if (!on && start >= 0) {
        runs.push([start, i - start])
        start = -1
      }
    }
    if (start >= 0) runs.push([start, cells.length - start])
    out.push(runs)
  }
  return out
}
