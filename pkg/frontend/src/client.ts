// Session client: owns the socket, the hello handshake, outbound sequence
// numbers and a full message log (both directions) for parity checks.
// The WebSocket implementation is injected so the same client runs in the
// browser (native WebSocket) and under node tests (the `ws` package).

import { ClientMsg, PROTOCOL_VERSION, ServerMsg, parseServerMsg } from './protocol.js'

export interface SocketLike {
  send(data: string): void
  close(): void
  onopen: ((ev?: unknown) => void) | null
  onmessage: ((ev: { data: unknown }) => void) | null
  onclose: ((ev?: unknown) => void) | null
  onerror: ((ev?: unknown) => void) | null
}

export type SocketFactory = (url: string) => SocketLike

export interface LoggedServerMsg {
  wallMs: number
  msg: ServerMsg
}

export interface LoggedClientMsg {
  wallMs: number
  msg: ClientMsg
}

export class SessionClient {
  private socket: SocketLike | null = null
  private seqOut = 0
  readonly sent: LoggedClientMsg[] = []
  readonly received: LoggedServerMsg[] = []
  onmessage: ((msg: ServerMsg) => void) | null = null
  ondisconnect: (() => void) | null = null

  constructor(
    private url: string,
    private makeSocket: SocketFactory,
    private script?: string,
  ) {}

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = this.makeSocket(this.url)
      this.socket = socket
      this.seqOut = 0
      socket.onopen = () => {
        const hello: ClientMsg = { seq: 1, type: 'hello', v: PROTOCOL_VERSION }
        if (this.script) (hello as { script?: string }).script = this.script
        this.seqOut = 1
        this.sent.push({ wallMs: Date.now(), msg: hello })
        socket.send(JSON.stringify(hello))
        resolve()
      }
      socket.onerror = (ev) => reject(ev)
      socket.onmessage = (ev) => {
        const msg = parseServerMsg(String(ev.data))
        this.received.push({ wallMs: Date.now(), msg })
        this.onmessage?.(msg)
      }
      socket.onclose = () => {
        this.socket = null
        this.ondisconnect?.()
      }
    })
  }

  get isConnected(): boolean {
    return this.socket !== null
  }

  send(partial: Omit<ClientMsg, 'seq'>): number {
    if (!this.socket) throw new Error('not connected')
    this.seqOut += 1
    const msg = { seq: this.seqOut, ...partial } as ClientMsg
    this.sent.push({ wallMs: Date.now(), msg })
    this.socket.send(JSON.stringify(msg))
    return this.seqOut
  }

  close(): void {
    this.socket?.close()
    this.socket = null
  }
}
