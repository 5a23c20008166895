/**
 * Environment client: spawns the simulator's wire service and drives it
 * over TCP, one JSON frame per line, strictly request/response.
 *
 * The simulator is a separate Python package; everything here goes through
 * its public protocol — no imports, no file sharing beyond stdout.
 */

import { spawn, type ChildProcess } from 'node:child_process'
import * as net from 'node:net'
import * as readline from 'node:readline'
import type {
  ObsFrame,
  ResetParams,
  ServerFrame,
  StepResFrame,
  WireAction,
} from './wire.js'

/** A rejected request, carrying the server's stable error code. */
export class GatewayError extends Error {
  readonly code: string
  readonly session: string

  constructor(code: string, session: string) {
    super(`gateway error ${code} (session ${session})`)
    this.code = code
    this.session = session
  }
}

export interface ServerHandle {
  host: string
  port: number
  stop(): Promise<void>
}

/**
 * Launch `python -m lcsim.cli serve --protocol env --port 0` and wait for
 * its "listening on host:port" banner. Port 0 lets the OS pick, so
 * parallel test runs never collide.
 */
export function spawnEnvServer(python = 'python3'): Promise<ServerHandle> {
  return new Promise((resolve, reject) => {
    const proc: ChildProcess = spawn(
      python,
      ['-m', 'lcsim.cli', 'serve', '--protocol', 'env', '--port', '0'],
      { stdio: ['ignore', 'pipe', 'inherit'] },
    )
    proc.on('error', reject)
    const exitEarly = (code: number | null) =>
      reject(new Error(`environment server exited before banner (code ${code})`))
    proc.on('exit', exitEarly)

    const rl = readline.createInterface({ input: proc.stdout! })
    rl.once('line', (line) => {
      rl.close()
      if (!line.startsWith('listening on ')) {
        proc.kill()
        reject(new Error(`unexpected server banner: ${line}`))
        return
      }
      const addr = line.slice('listening on '.length)
      const sep = addr.lastIndexOf(':')
      const host = addr.slice(0, sep)
      const port = Number(addr.slice(sep + 1))
      proc.removeListener('exit', exitEarly)
      resolve({
        host,
        port,
        stop: () =>
          new Promise<void>((done) => {
            if (proc.exitCode !== null) return done()
            proc.once('exit', () => done())
            proc.kill('SIGTERM')
            setTimeout(() => proc.kill('SIGKILL'), 2000).unref()
          }),
      })
    })
  })
}

/**
 * One live connection to the environment service.
 *
 * The protocol is strictly one response per request, so a single pending
 * promise and a line buffer are the whole state machine.
 */
export class EnvClient {
  readonly session: string
  private socket: net.Socket
  private buffer = ''
  private pending: {
    resolve: (frame: ServerFrame) => void
    reject: (err: Error) => void
  } | null = null
  private requestCounter = 0

  private constructor(socket: net.Socket, session: string) {
    this.socket = socket
    this.session = session
    socket.setNoDelay(true)
    socket.on('data', (chunk: Buffer) => this.onData(chunk))
    socket.on('error', (err) => this.fail(err))
    socket.on('close', () => this.fail(new Error(`connection closed (session ${session})`)))
  }

  static connect(host: string, port: number): Promise<EnvClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        socket.removeListener('error', reject)
        resolve(new EnvClient(socket, `${host}:${port}`))
      })
      socket.once('error', reject)
    })
  }

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString('utf-8')
    let nl: number
    while ((nl = this.buffer.indexOf('\n')) >= 0) {
      const line = this.buffer.slice(0, nl)
      this.buffer = this.buffer.slice(nl + 1)
      const waiter = this.pending
      this.pending = null
      if (!waiter) continue // unsolicited frame; protocol never sends these
      try {
        waiter.resolve(JSON.parse(line) as ServerFrame)
      } catch (err) {
        waiter.reject(err as Error)
      }
    }
  }

  private fail(err: Error): void {
    const waiter = this.pending
    this.pending = null
    if (waiter) waiter.reject(err)
  }

  /** Send one frame, await the one response. */
  request(frame: Record<string, unknown>): Promise<ServerFrame> {
    if (this.pending) {
      return Promise.reject(
        new Error(`request ${this.requestCounter} still in flight (session ${this.session})`),
      )
    }
    this.requestCounter += 1
    return new Promise((resolve, reject) => {
      this.pending = { resolve, reject }
      this.socket.write(JSON.stringify(frame) + '\n')
    })
  }

  private expect<T extends ServerFrame>(frame: ServerFrame, t: T['t']): T {
    if (frame.t === 'err') throw new GatewayError(frame.code, this.session)
    if (frame.t !== t) {
      throw new Error(`expected ${t} frame, got ${frame.t} (session ${this.session})`)
    }
    return frame as T
  }

  async reset(params: ResetParams): Promise<ObsFrame> {
    const frame = await this.request({ t: 'reset', ...params })
    return this.expect<ObsFrame>(frame, 'obs')
  }

  async act(actions: (WireAction | null)[]): Promise<StepResFrame> {
    const frame = await this.request({ t: 'act', actions })
    return this.expect<StepResFrame>(frame, 'stepres')
  }

  async close(): Promise<void> {
    try {
      await this.request({ t: 'close' })
    } finally {
      this.socket.destroy()
      this.socket.removeAllListeners('close')
    }
  }

  /** Tear down without the goodbye handshake (e.g. after a socket error). */
  destroy(): void {
    this.socket.removeAllListeners('close')
    this.socket.destroy()
  }
}
