/**
 * Console view model: a record of what the server has said, nothing more.
 *
 * The invariant that keeps the console honest is that every field below
 * is copied from server frames — the console never simulates planner
 * rules client-side, so killing and reopening it cannot change a
 * session's course. Reconnects replay the server's full event backlog;
 * the cursor-based dedup below keeps the feed free of duplicates.
 */

import type {
  EventFrame,
  HelloFrame,
  Palette,
  ServerFrame,
  SnapshotFrame,
} from './protocol.js';

/** Rolling feed capacity; oldest entries fall off. */
export const MAX_FEED = 500;

export type ConnectionState = 'connecting' | 'open' | 'closed';

export class ViewModel {
  connection: ConnectionState = 'connecting';
  reconnectAttempts = 0;
  sessionId: string | null = null;
  palette: Palette | null = null;
  snapshot: SnapshotFrame | null = null;
  feed: EventFrame[] = [];
  /** Events dropped off the front of the bounded feed. */
  droppedEvents = 0;
  lastError: string | null = null;

  /** Total event frames applied since the session (not socket) started. */
  private eventsApplied = 0;
  /** Position within the current connection's event stream. */
  private backlogCursor = 0;

  socketOpened(): void {
    this.connection = 'open';
    this.reconnectAttempts = 0;
    // the server now replays its whole backlog; skip what we already have
    this.backlogCursor = 0;
  }

  socketClosed(): void {
    this.connection = 'closed';
  }

  reconnecting(attempt: number): void {
    this.connection = 'connecting';
    this.reconnectAttempts = attempt;
  }

  apply(frame: ServerFrame): void {
    switch (frame.t) {
      case 'hello':
        this.applyHello(frame);
        break;
      case 'event':
        this.applyEvent(frame);
        break;
      case 'snapshot':
        this.applySnapshot(frame);
        break;
      case 'error':
        this.lastError = frame.error;
        break;
    }
  }

  private applyHello(frame: HelloFrame): void {
    this.sessionId = frame.session;
    this.palette = frame.scenario;
  }

  private applyEvent(frame: EventFrame): void {
    this.backlogCursor += 1;
    if (this.backlogCursor <= this.eventsApplied) {
      return; // backlog replay of an event already in the feed
    }
    this.eventsApplied += 1;
    this.feed.push(frame);
    if (this.feed.length > MAX_FEED) {
      this.feed.splice(0, this.feed.length - MAX_FEED);
      this.droppedEvents += 1;
    }
  }

  private applySnapshot(frame: SnapshotFrame): void {
    const last = this.snapshot;
    if (last !== null && frame.tick < last.tick) {
      // the session was reset: the server's event log restarted too
      this.feed = [];
      this.droppedEvents = 0;
      this.eventsApplied = 0;
      this.backlogCursor = 0;
    }
    this.snapshot = frame;
  }

  /**
   * Debounce progress in [0, 1]: how close the current candidate
   * intention is to the consecutive-tick bar that starts a skill.
   * Reaches 1 exactly on the tick a SkillStarted event fires.
   */
  debounceProgress(): number {
    if (this.snapshot === null || this.palette === null) return 0;
    const bar = this.palette.params.n_r;
    return Math.min(1, this.snapshot.streak / bar);
  }

  /** One-line connection banner; empty string when all is well. */
  banner(): string {
    if (this.connection === 'open') return '';
    if (this.connection === 'closed') return 'disconnected';
    return this.reconnectAttempts > 0
      ? `reconnecting (attempt ${this.reconnectAttempts})…`
      : 'connecting…';
  }

  intentionName(id: number | null): string {
    if (id === null || this.palette === null) return '—';
    const entry = this.palette.intentions.find((i) => i.id === id);
    return entry ? entry.name : `#${id}`;
  }

  skillName(id: number | null): string {
    if (id === null || this.palette === null) return '—';
    const entry = this.palette.skills.find((s) => s.id === id);
    return entry ? entry.name : `#${id}`;
  }
}
