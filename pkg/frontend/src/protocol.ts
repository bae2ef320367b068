/**
 * Wire protocol types for the engine's session server.
 *
 * The console consumes this protocol verbatim and nothing else: every
 * field here mirrors a JSON frame the server actually sends or accepts.
 */

// ---------------------------------------------------------------------------
// client -> server
// ---------------------------------------------------------------------------

export type DisturbKind = 'hold' | 'loot' | 'near';

export type ClientFrame =
  | { t: 'intention'; id: number; held: boolean }
  | { t: 'pause' }
  | { t: 'resume' }
  | { t: 'speed'; x: number }
  | { t: 'step'; n: number }
  | { t: 'reset' }
  | { t: 'disturb'; kind: DisturbKind; ticks?: number };

// ---------------------------------------------------------------------------
// server -> client
// ---------------------------------------------------------------------------

export interface PaletteIntention {
  id: number;
  name: string;
  kind: string;
  skill: number | null;
}

export interface PaletteSkill {
  id: number;
  name: string;
  kind: string;
}

export interface Palette {
  name: string;
  params: {
    n_r: number;
    k_2: number;
    tick_rate: number;
    safety_threshold: number;
  };
  intentions: PaletteIntention[];
  skills: PaletteSkill[];
  objects: { id: number; name: string }[];
}

export interface HelloFrame {
  t: 'hello';
  session: string;
  scenario: Palette;
  mode: string;
  tick: number;
  paused: boolean;
  speed: number;
  decimation: number;
}

/** One planner/safety event; extra payload fields ride along flat. */
export interface EventFrame {
  t: 'event';
  tick: number;
  kind: string;
  [extra: string]: unknown;
}

export interface SafetyView {
  safe: boolean;
  distance: number | null;
  robot_point: number;
  hand_point: number;
}

export interface WorldView {
  tick: number;
  joints: { left: number[]; right: number[] };
  /** 14 guarded follower points: left arm 7, then right arm 7. */
  keypoints: number[][];
  /** Up to 10 leader hand points: left hand 5, then right hand 5. */
  hand_points: number[][];
  leader: { left: number[]; right: number[]; intention: number };
  occupancy: [string, string];
  objects: Record<string, { at: string; position: number[] }>;
  lamp_on?: boolean;
  stamp_marks?: number;
  executor: { skill: number; name: string; progress?: number; signal?: number } | null;
}

export interface SnapshotFrame {
  t: 'snapshot';
  tick: number;
  phase: 'idle' | 'executing';
  /** Running skill id, or null while idle. */
  skill: number | null;
  reversing: boolean;
  queue: number[];
  streak: number;
  candidate: number;
  active_intention: number;
  held: number;
  paused: boolean;
  speed: number;
  safety: SafetyView;
  world: WorldView;
}

export interface ErrorFrame {
  t: 'error';
  error: string;
}

export type ServerFrame = HelloFrame | EventFrame | SnapshotFrame | ErrorFrame;

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

const SERVER_FRAME_KINDS = new Set(['hello', 'event', 'snapshot', 'error']);

/** Parse one wire message; returns null for anything malformed. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== 'object' || doc === null) return null;
  const t = (doc as { t?: unknown }).t;
  if (typeof t !== 'string' || !SERVER_FRAME_KINDS.has(t)) return null;
  return doc as ServerFrame;
}
