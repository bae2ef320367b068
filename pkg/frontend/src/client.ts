/**
 * Session client: one WebSocket, reconnect with exponential backoff,
 * press-and-hold intention handling, and a bounded queue that decouples
 * rendering from message receipt.
 *
 * Queue policy mirrors the server's: event frames are lossless (the
 * bounded rolling feed downstream is the only place they expire), while
 * snapshots are best-effort — at most one is ever queued, a newer one
 * replacing it. A render pass calls drain() and paints once.
 */

import type { ClientFrame, DisturbKind, ServerFrame } from './protocol.js';
import { parseServerFrame } from './protocol.js';
import { ViewModel } from './viewmodel.js';

/** Minimal socket surface shared by browser WebSocket and the ws package. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export const BACKOFF_BASE_MS = 250;
export const BACKOFF_MAX_MS = 5_000;

/** Delay before reconnect attempt n (1-based): 250 ms doubling, capped. */
export function backoffDelay(attempt: number): number {
  return Math.min(BACKOFF_BASE_MS * 2 ** (attempt - 1), BACKOFF_MAX_MS);
}

export class FrameQueue {
  private events: ServerFrame[] = [];
  private pendingSnapshot: ServerFrame | null = null;
  /** Stale snapshots replaced before anyone rendered them. */
  snapshotsDropped = 0;

  push(frame: ServerFrame): void {
    if (frame.t === 'snapshot') {
      if (this.pendingSnapshot !== null) this.snapshotsDropped += 1;
      this.pendingSnapshot = frame;
      return;
    }
    this.events.push(frame);
  }

  /** Everything pending, oldest first, snapshot last (it is the newest). */
  drain(): ServerFrame[] {
    const out = this.events;
    this.events = [];
    if (this.pendingSnapshot !== null) {
      out.push(this.pendingSnapshot);
      this.pendingSnapshot = null;
    }
    return out;
  }

  get size(): number {
    return this.events.length + (this.pendingSnapshot === null ? 0 : 1);
  }
}

export interface ClientOptions {
  socketFactory?: SocketFactory;
  /** Reconnect automatically when the socket drops (default true). */
  reconnect?: boolean;
  /** Called after drained frames were applied — schedule a repaint here. */
  onFrames?: (frames: ServerFrame[]) => void;
}

export class ConsoleClient {
  readonly vm = new ViewModel();
  readonly queue = new FrameQueue();
  heldIntention: number | null = null;

  private url = '';
  private socket: SocketLike | null = null;
  private readonly factory: SocketFactory;
  private readonly reconnect: boolean;
  private readonly onFrames: ((frames: ServerFrame[]) => void) | null;
  private attempt = 0;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(options: ClientOptions = {}) {
    this.factory =
      options.socketFactory ??
      ((url) => new (globalThis as { WebSocket: new (u: string) => SocketLike }).WebSocket(url));
    this.reconnect = options.reconnect ?? true;
    this.onFrames = options.onFrames ?? null;
  }

  connect(url: string): void {
    this.url = url;
    this.closedByUser = false;
    this.open();
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
    this.vm.socketClosed();
  }

  /** Apply everything received since the last drain; returns it. */
  drain(): ServerFrame[] {
    const frames = this.queue.drain();
    for (const frame of frames) this.vm.apply(frame);
    if (frames.length > 0) this.onFrames?.(frames);
    return frames;
  }

  // -- leader controls --------------------------------------------------

  /** Press an intention button; any previously held one releases first. */
  pressIntention(id: number): void {
    if (this.heldIntention === id) return;
    if (this.heldIntention !== null) {
      this.send({ t: 'intention', id: this.heldIntention, held: false });
    }
    this.send({ t: 'intention', id, held: true });
    this.heldIntention = id;
  }

  releaseIntention(): void {
    if (this.heldIntention === null) return;
    this.send({ t: 'intention', id: this.heldIntention, held: false });
    this.heldIntention = null;
  }

  pause(): void {
    this.send({ t: 'pause' });
  }

  resume(): void {
    this.send({ t: 'resume' });
  }

  setSpeed(x: number): void {
    this.send({ t: 'speed', x });
  }

  step(n: number): void {
    this.send({ t: 'step', n });
  }

  reset(): void {
    this.heldIntention = null;
    this.send({ t: 'reset' });
  }

  disturb(kind: DisturbKind, ticks?: number): void {
    this.send(ticks === undefined ? { t: 'disturb', kind } : { t: 'disturb', kind, ticks });
  }

  send(frame: ClientFrame): void {
    this.socket?.send(JSON.stringify(frame));
  }

  // -- socket lifecycle --------------------------------------------------

  private open(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.vm.socketOpened();
    };
    socket.onmessage = (event) => {
      const frame = parseServerFrame(String(event.data));
      if (frame !== null) this.queue.push(frame);
    };
    socket.onerror = () => {
      // the close handler owns recovery
    };
    socket.onclose = () => {
      if (this.socket !== socket) return; // superseded
      this.socket = null;
      if (this.closedByUser || !this.reconnect) {
        this.vm.socketClosed();
        return;
      }
      this.attempt += 1;
      this.vm.reconnecting(this.attempt);
      this.reconnectTimer = setTimeout(() => this.open(), backoffDelay(this.attempt));
    };
  }
}
