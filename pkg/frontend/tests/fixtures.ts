/** Hand-built wire frames shaped exactly like the server's JSON. */

import type {
  EventFrame,
  HelloFrame,
  Palette,
  SnapshotFrame,
  WorldView,
} from '../src/protocol.js';

export function makePalette(): Palette {
  return {
    name: 'table service',
    params: { n_r: 15, k_2: 5, tick_rate: 30, safety_threshold: 0.25 },
    intentions: [
      { id: 0, name: 'Idle', kind: 'idle', skill: null },
      { id: 1, name: 'Cancel', kind: 'cancel', skill: null },
      { id: 2, name: 'Pointing Can', kind: 'trigger', skill: 1 },
    ],
    skills: [
      { id: 0, name: 'Rest', kind: 'gesture' },
      { id: 1, name: 'Pick Can', kind: 'manipulation' },
      { id: 2, name: 'Place Can', kind: 'manipulation' },
    ],
    objects: [{ id: 0, name: 'can' }],
  };
}

export function makeHello(session = 'abc123'): HelloFrame {
  return {
    t: 'hello',
    session,
    scenario: makePalette(),
    mode: 'direct',
    tick: 0,
    paused: true,
    speed: 1,
    decimation: 1,
  };
}

export function makeWorld(tick: number): WorldView {
  const keypoints = Array.from({ length: 14 }, (_, i) => [
    0.1 * i,
    i < 7 ? 0.2 : -0.2,
    0.8,
  ]);
  const handPoints = Array.from({ length: 10 }, (_, i) => [0.5, 0.05 * i, 1.0]);
  return {
    tick,
    joints: { left: [0, 0, 0, 0], right: [0, 0, 0, 0] },
    keypoints,
    hand_points: handPoints,
    leader: { left: [0.5, 0.3, 1.0], right: [0.5, -0.3, 1.0], intention: 0 },
    occupancy: ['empty', 'empty'],
    objects: { can: { at: 'table', position: [0.4, -0.1, 0.9] } },
    executor: null,
  };
}

export function makeSnapshot(
  tick: number,
  overrides: Partial<SnapshotFrame> = {},
): SnapshotFrame {
  return {
    t: 'snapshot',
    tick,
    phase: 'idle',
    skill: null,
    reversing: false,
    queue: [],
    streak: 0,
    candidate: 0,
    active_intention: 0,
    held: 0,
    paused: true,
    speed: 1,
    safety: { safe: true, distance: 0.4, robot_point: -1, hand_point: -1 },
    world: makeWorld(tick),
    ...overrides,
  };
}

export function ev(
  tick: number,
  kind: string,
  extra: Record<string, unknown> = {},
): EventFrame {
  return { t: 'event', tick, kind, ...extra };
}
