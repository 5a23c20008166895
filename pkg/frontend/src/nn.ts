/**
 * Minimal dense/conv neural-network kernels on flat Float64Arrays.
 *
 * No autograd framework: every layer implements forward and backward by
 * hand, caching whatever the backward pass needs. Shapes are fixed at
 * construction and batches are row-major, so the hot loops are plain
 * typed-array arithmetic the JIT can vectorize.
 */

import { Rng } from './rng.js'

/** One learnable tensor with its gradient accumulator. */
export class Param {
  readonly name: string
  readonly data: Float64Array
  readonly grad: Float64Array

  constructor(name: string, size: number) {
    this.name = name
    this.data = new Float64Array(size)
    this.grad = new Float64Array(size)
  }
}

export function sigmoid(x: number): number {
  return x >= 0 ? 1 / (1 + Math.exp(-x)) : Math.exp(x) / (1 + Math.exp(x))
}

/** log(1 + exp(x)) without overflow on either tail. */
export function softplus(x: number): number {
  if (x > 30) return x
  if (x < -30) return Math.exp(x)
  return Math.log1p(Math.exp(x))
}

function xavier(param: Param, fanIn: number, fanOut: number, rng: Rng): void {
  const bound = Math.sqrt(6 / (fanIn + fanOut))
  for (let i = 0; i < param.data.length; i++) {
    param.data[i] = rng.uniform(-bound, bound)
  }
}

/**
 * 2-D convolution, square kernel, zero padding.
 * Input [n, inC, h, w] flat; output [n, outC, outH, outW] flat with
 * outH = floor((h + 2*pad - k) / stride) + 1.
 */
export class Conv2d {
  readonly w: Param
  readonly b: Param
  readonly inC: number
  readonly outC: number
  readonly h: number
  readonly wIn: number
  readonly k: number
  readonly stride: number
  readonly pad: number
  readonly outH: number
  readonly outW: number
  private lastInput: Float64Array | null = null
  private lastN = 0

  constructor(
    name: string,
    inC: number,
    outC: number,
    h: number,
    w: number,
    rng: Rng,
    k = 3,
    stride = 2,
    pad = 1,
  ) {
    this.inC = inC
    this.outC = outC
    this.h = h
    this.wIn = w
    this.k = k
    this.stride = stride
    this.pad = pad
    this.outH = Math.floor((h + 2 * pad - k) / stride) + 1
    this.outW = Math.floor((w + 2 * pad - k) / stride) + 1
    this.w = new Param(`${name}.w`, outC * inC * k * k)
    this.b = new Param(`${name}.b`, outC)
    xavier(this.w, inC * k * k, outC * k * k, rng)
  }

  get inSize(): number {
    return this.inC * this.h * this.wIn
  }

  get outSize(): number {
    return this.outC * this.outH * this.outW
  }

  params(): Param[] {
    return [this.w, this.b]
  }

  forward(x: Float64Array, n: number): Float64Array {
    const { inC, outC, h, wIn, k, stride, pad, outH, outW } = this
    if (x.length !== n * this.inSize) throw new Error('conv input size mismatch')
    this.lastInput = x
    this.lastN = n
    const y = new Float64Array(n * this.outSize)
    const wd = this.w.data
    const bd = this.b.data
    for (let s = 0; s < n; s++) {
      const xBase = s * this.inSize
      const yBase = s * this.outSize
      for (let oc = 0; oc < outC; oc++) {
        const wBase = oc * inC * k * k
        const bias = bd[oc]
        const yPlane = yBase + oc * outH * outW
        for (let oy = 0; oy < outH; oy++) {
          const iy0 = oy * stride - pad
          for (let ox = 0; ox < outW; ox++) {
            const ix0 = ox * stride - pad
            let acc = bias
            for (let ic = 0; ic < inC; ic++) {
              const xPlane = xBase + ic * h * wIn
              const wPlane = wBase + ic * k * k
              for (let ky = 0; ky < k; ky++) {
                const iy = iy0 + ky
                if (iy < 0 || iy >= h) continue
                const xRow = xPlane + iy * wIn
                const wRow = wPlane + ky * k
                for (let kx = 0; kx < k; kx++) {
                  const ix = ix0 + kx
                  if (ix < 0 || ix >= wIn) continue
                  acc += wd[wRow + kx] * x[xRow + ix]
                }
              }
            }
            y[yPlane + oy * outW + ox] = acc
          }
        }
      }
    }
    return y
  }

  /** Accumulates weight/bias grads; returns gradient w.r.t. the input. */
  backward(dy: Float64Array): Float64Array {
    const x = this.lastInput
    if (!x) throw new Error('conv backward before forward')
    const n = this.lastN
    const { inC, outC, h, wIn, k, stride, pad, outH, outW } = this
    const dx = new Float64Array(n * this.inSize)
    const wd = this.w.data
    const gw = this.w.grad
    const gb = this.b.grad
    for (let s = 0; s < n; s++) {
      const xBase = s * this.inSize
      const yBase = s * this.outSize
      for (let oc = 0; oc < outC; oc++) {
        const wBase = oc * inC * k * k
        const yPlane = yBase + oc * outH * outW
        for (let oy = 0; oy < outH; oy++) {
          const iy0 = oy * stride - pad
          for (let ox = 0; ox < outW; ox++) {
            const g = dy[yPlane + oy * outW + ox]
            if (g === 0) continue
            const ix0 = ox * stride - pad
            gb[oc] += g
            for (let ic = 0; ic < inC; ic++) {
              const xPlane = xBase + ic * h * wIn
              const wPlane = wBase + ic * k * k
              for (let ky = 0; ky < k; ky++) {
                const iy = iy0 + ky
                if (iy < 0 || iy >= h) continue
                const xRow = xPlane + iy * wIn
                const wRow = wPlane + ky * k
                for (let kx = 0; kx < k; kx++) {
                  const ix = ix0 + kx
                  if (ix < 0 || ix >= wIn) continue
                  gw[wRow + kx] += g * x[xRow + ix]
                  dx[xRow + ix] += g * wd[wRow + kx]
                }
              }
            }
          }
        }
      }
    }
    return dx
  }
}

/** Fully connected layer; input [n, inDim], output [n, outDim]. */
export class Dense {
  readonly w: Param
  readonly b: Param
  readonly inDim: number
  readonly outDim: number
  private lastInput: Float64Array | null = null
  private lastN = 0

  constructor(name: string, inDim: number, outDim: number, rng: Rng) {
    this.inDim = inDim
    this.outDim = outDim
    this.w = new Param(`${name}.w`, outDim * inDim)
    this.b = new Param(`${name}.b`, outDim)
    xavier(this.w, inDim, outDim, rng)
  }

  params(): Param[] {
    return [this.w, this.b]
  }

  forward(x: Float64Array, n: number): Float64Array {
    const { inDim, outDim } = this
    if (x.length !== n * inDim) throw new Error('dense input size mismatch')
    this.lastInput = x
    this.lastN = n
    const y = new Float64Array(n * outDim)
    const wd = this.w.data
    const bd = this.b.data
    for (let s = 0; s < n; s++) {
      const xBase = s * inDim
      const yBase = s * outDim
      for (let o = 0; o < outDim; o++) {
        const wBase = o * inDim
        let acc = bd[o]
        for (let i = 0; i < inDim; i++) acc += wd[wBase + i] * x[xBase + i]
        y[yBase + o] = acc
      }
    }
    return y
  }

  backward(dy: Float64Array): Float64Array {
    const x = this.lastInput
    if (!x) throw new Error('dense backward before forward')
    const n = this.lastN
    const { inDim, outDim } = this
    const dx = new Float64Array(n * inDim)
    const wd = this.w.data
    const gw = this.w.grad
    const gb = this.b.grad
    for (let s = 0; s < n; s++) {
      const xBase = s * inDim
      const yBase = s * outDim
      for (let o = 0; o < outDim; o++) {
        const g = dy[yBase + o]
        if (g === 0) continue
        gb[o] += g
        const wBase = o * inDim
        for (let i = 0; i < inDim; i++) {
          gw[wBase + i] += g * x[xBase + i]
          dx[xBase + i] += g * wd[wBase + i]
        }
      }
    }
    return dx
  }
}

/** Elementwise x * sigmoid(x). */
export class Swish {
  private lastInput: Float64Array | null = null

  forward(x: Float64Array): Float64Array {
    this.lastInput = x
    const y = new Float64Array(x.length)
    for (let i = 0; i < x.length; i++) y[i] = x[i] * sigmoid(x[i])
    return y
  }

  backward(dy: Float64Array): Float64Array {
    const x = this.lastInput
    if (!x) throw new Error('swish backward before forward')
    const dx = new Float64Array(x.length)
    for (let i = 0; i < x.length; i++) {
      const s = sigmoid(x[i])
      dx[i] = dy[i] * s * (1 + x[i] * (1 - s))
    }
    return dx
  }
}

/** Adam with optional global-norm gradient clipping. */
export class Adam {
  readonly params: Param[]
  lr: number
  readonly beta1: number
  readonly beta2: number
  readonly eps: number
  readonly maxGradNorm: number
  private m: Float64Array[]
  private v: Float64Array[]
  private t = 0

  constructor(
    params: Param[],
    lr: number,
    { beta1 = 0.9, beta2 = 0.999, eps = 1e-8, maxGradNorm = 0 } = {},
  ) {
    this.params = params
    this.lr = lr
    this.beta1 = beta1
    this.beta2 = beta2
    this.eps = eps
    this.maxGradNorm = maxGradNorm
    this.m = params.map((p) => new Float64Array(p.data.length))
    this.v = params.map((p) => new Float64Array(p.data.length))
  }

  zeroGrads(): void {
    for (const p of this.params) p.grad.fill(0)
  }

  /** Returns the pre-clip global gradient norm (handy for logging). */
  step(): number {
    let sq = 0
    for (const p of this.params) {
      for (let i = 0; i < p.grad.length; i++) sq += p.grad[i] * p.grad[i]
    }
    const norm = Math.sqrt(sq)
    const scale = this.maxGradNorm > 0 && norm > this.maxGradNorm ? this.maxGradNorm / norm : 1
    this.t += 1
    const c1 = 1 - Math.pow(this.beta1, this.t)
    const c2 = 1 - Math.pow(this.beta2, this.t)
    for (let j = 0; j < this.params.length; j++) {
      const p = this.params[j]
      const m = this.m[j]
      const v = this.v[j]
      for (let i = 0; i < p.data.length; i++) {
        const g = p.grad[i] * scale
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g * g
        p.data[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps)
      }
    }
    return norm
  }
}
