/**
 * Seeded pseudo-random numbers.
 *
 * Math.random() is not seedable, and every run of the trainer — weight
 * init, action sampling, evaluation — must be reproducible from a single
 * integer seed. sfc32 is small, fast, and passes PractRand; splitmix32
 * expands one seed into the four words of state.
 */

export class Rng {
  private a: number
  private b: number
  private c: number
  private d: number
  private spare: number | null = null

  constructor(seed: number) {
    // splitmix32 stream seeds the sfc32 state words
    let s = seed >>> 0
    const next = () => {
      s = (s + 0x9e3779b9) >>> 0
      let z = s
      z = Math.imul(z ^ (z >>> 16), 0x21f0aaad)
      z = Math.imul(z ^ (z >>> 15), 0x735a2d97)
      return (z ^ (z >>> 15)) >>> 0
    }
    this.a = next()
    this.b = next()
    this.c = next()
    this.d = next()
    for (let i = 0; i < 12; i++) this.u32()
  }

  /** Uniform 32-bit unsigned integer. */
  u32(): number {
    const t = (this.a + this.b) >>> 0
    this.a = this.b ^ (this.b >>> 9)
    this.b = (this.c + (this.c << 3)) >>> 0
    this.c = ((this.c << 21) | (this.c >>> 11)) >>> 0
    this.d = (this.d + 1) >>> 0
    const out = (t + this.d) >>> 0
    this.c = (this.c + out) >>> 0
    return out
  }

  /** Uniform float in [0, 1). */
  random(): number {
    return this.u32() / 4294967296
  }

  /** Uniform float in [lo, hi). */
  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.random()
  }

  /** Uniform integer in [0, n). */
  int(n: number): number {
    return Math.floor(this.random() * n)
  }

  /** Standard normal via Box-Muller (caches the spare draw). */
  normal(): number {
    if (this.spare !== null) {
      const v = this.spare
      this.spare = null
      return v
    }
    let u = 0
    while (u === 0) u = this.random()
    const r = Math.sqrt(-2 * Math.log(u))
    const theta = 2 * Math.PI * this.random()
    this.spare = r * Math.sin(theta)
    return r * Math.cos(theta)
  }
}
