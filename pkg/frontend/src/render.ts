/**
 * Pure rendering helpers: 2D side-view projection of the guarded
 * keypoints, safety coloring, and timeline lane extraction. The
 * canvas-painting entry point at the bottom is the only DOM-aware part.
 */

import type { EventFrame, SnapshotFrame } from './protocol.js';

export const POINT_SAFE = '#3fb950';
export const POINT_UNSAFE = '#f85149';
export const HAND_COLOR = '#58a6ff';

/** Side-view window of the workspace, in metres. */
export interface Viewport {
  width: number;
  height: number;
  world: { x0: number; x1: number; z0: number; z1: number };
}

export const DEFAULT_WORLD = { x0: -0.3, x1: 0.9, z0: 0.0, z1: 1.5 };

/**
 * Orthographic side view: world x (forward) becomes screen u, world z
 * (up) becomes screen v (flipped), uniformly scaled and centered.
 */
export function projectSideView(point: number[], vp: Viewport): [number, number] {
  const { x0, x1, z0, z1 } = vp.world;
  const scale = Math.min(vp.width / (x1 - x0), vp.height / (z1 - z0));
  const uPad = (vp.width - scale * (x1 - x0)) / 2;
  const vPad = (vp.height - scale * (z1 - z0)) / 2;
  const x = point[0] ?? 0;
  const z = point[2] ?? 0;
  return [uPad + (x - x0) * scale, vp.height - vPad - (z - z0) * scale];
}

/**
 * Per-point colors for the latest snapshot. Everything is safe-green
 * until the supervisor reports an unsafe pair; then exactly the
 * offending follower point and leader hand point turn red.
 */
export function keypointColors(snapshot: SnapshotFrame): {
  robot: string[];
  hands: string[];
} {
  const robot = snapshot.world.keypoints.map(() => POINT_SAFE);
  const hands = snapshot.world.hand_points.map(() => HAND_COLOR);
  const { safe, robot_point, hand_point } = snapshot.safety;
  if (!safe) {
    if (robot_point >= 0 && robot_point < robot.length) robot[robot_point] = POINT_UNSAFE;
    if (hand_point >= 0 && hand_point < hands.length) hands[hand_point] = POINT_UNSAFE;
  }
  return { robot, hands };
}

/** Bone segments within one 7-point arm block: shoulder→…→wrist. */
export const ARM_SEGMENTS: [number, number][] = [
  [0, 1],
  [1, 2],
  [2, 3],
];

// ---------------------------------------------------------------------------
// timeline lanes
// ---------------------------------------------------------------------------

export interface Span {
  from: number;
  /** Closing tick, or null while still open. */
  to: number | null;
  /** Intention or skill id; -1 for safety spans. */
  id: number;
}

export interface Lanes {
  intentions: Span[];
  skills: Span[];
  safety: Span[];
}

const SKILL_CLOSERS = new Set([
  'skill_succeeded',
  'skill_interrupted',
  'skill_timed_out',
]);

/**
 * Fold the event feed into three lanes of spans. Only events are
 * consulted — the lanes redraw identically from a replayed trace.
 */
export function timelineLanes(feed: EventFrame[]): Lanes {
  const intentions: Span[] = [];
  const skills: Span[] = [];
  const safety: Span[] = [];
  for (const e of feed) {
    if (e.kind === 'intention_observed') {
      const last = intentions[intentions.length - 1];
      if (last !== undefined && last.to === null) last.to = e.tick;
      intentions.push({ from: e.tick, to: null, id: e['intention'] as number });
    } else if (e.kind === 'skill_started') {
      const open = skills[skills.length - 1];
      if (open !== undefined && open.to === null) open.to = e.tick;
      skills.push({ from: e.tick, to: null, id: e['skill'] as number });
    } else if (
      SKILL_CLOSERS.has(e.kind) ||
      (e.kind === 'diagnostic' && e['code'] === 'skill_failed')
    ) {
      const last = skills[skills.length - 1];
      if (last !== undefined && last.to === null) last.to = e.tick;
    } else if (e.kind === 'safety_halt') {
      safety.push({ from: e.tick, to: null, id: -1 });
    } else if (e.kind === 'safety_resume') {
      const last = safety[safety.length - 1];
      if (last !== undefined && last.to === null) last.to = e.tick;
    }
  }
  return { intentions, skills, safety };
}

// ---------------------------------------------------------------------------
// canvas painting (browser only)
// ---------------------------------------------------------------------------

/** Paint one snapshot onto a 2D canvas context. */
export function drawScene(
  ctx: CanvasRenderingContext2D,
  snapshot: SnapshotFrame,
  vp: Viewport,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  const colors = keypointColors(snapshot);
  const points = snapshot.world.keypoints;

  ctx.lineWidth = 2;
  ctx.strokeStyle = '#8b949e';
  for (const arm of [0, 7]) {
    for (const [a, b] of ARM_SEGMENTS) {
      const pa = points[arm + a];
      const pb = points[arm + b];
      if (pa === undefined || pb === undefined) continue;
      const [ua, va] = projectSideView(pa, vp);
      const [ub, vb] = projectSideView(pb, vp);
      ctx.beginPath();
      ctx.moveTo(ua, va);
      ctx.lineTo(ub, vb);
      ctx.stroke();
    }
  }

  points.forEach((p, i) => {
    const [u, v] = projectSideView(p, vp);
    ctx.fillStyle = colors.robot[i] ?? POINT_SAFE;
    ctx.beginPath();
    ctx.arc(u, v, 4, 0, 2 * Math.PI);
    ctx.fill();
  });

  snapshot.world.hand_points.forEach((p, i) => {
    const [u, v] = projectSideView(p, vp);
    ctx.fillStyle = colors.hands[i] ?? HAND_COLOR;
    ctx.beginPath();
    ctx.arc(u, v, 3, 0, 2 * Math.PI);
    ctx.fill();
  });

  for (const [name, obj] of Object.entries(snapshot.world.objects)) {
    const [u, v] = projectSideView(obj.position, vp);
    ctx.fillStyle = '#d29922';
    ctx.fillRect(u - 3, v - 3, 6, 6);
    ctx.fillStyle = '#8b949e';
    ctx.font = '10px sans-serif';
    ctx.fillText(name, u + 5, v - 5);
  }
}
