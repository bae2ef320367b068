/**
 * Browser entry point: wires the wire-protocol client, view model and
 * renderer to the DOM. Everything runs on the single UI thread; frames
 * arrive through the client's bounded queue and are applied once per
 * animation frame, so a slow paint can never back up the socket.
 */

import { ConsoleClient } from './client.js';
import {
  DEFAULT_WORLD,
  drawScene,
  timelineLanes,
  type Viewport,
} from './render.js';
import type { ViewModel } from './viewmodel.js';

const LANE_COLORS = { intentions: '#d29922', skills: '#3fb950', safety: '#f85149' };

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className !== undefined) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function drawTimeline(ctx: CanvasRenderingContext2D, vm: ViewModel, width: number): void {
  ctx.clearRect(0, 0, width, 60);
  const lanes = timelineLanes(vm.feed);
  const now = vm.snapshot?.tick ?? 0;
  const first = vm.feed[0]?.tick ?? 0;
  const span = Math.max(now - first, 1);
  const toX = (tick: number): number => ((tick - first) / span) * width;
  const rows: [keyof typeof LANE_COLORS, number][] = [
    ['intentions', 4],
    ['skills', 24],
    ['safety', 44],
  ];
  for (const [lane, y] of rows) {
    ctx.fillStyle = LANE_COLORS[lane];
    for (const s of lanes[lane]) {
      const x0 = toX(s.from);
      const x1 = toX(s.to ?? now);
      ctx.fillRect(x0, y, Math.max(x1 - x0, 2), 12);
    }
  }
}

/** Build the console UI inside `root` and connect to the session URL. */
export function mountConsole(doc: Document, root: HTMLElement, url: string): ConsoleClient {
  const client = new ConsoleClient();
  const vm = client.vm;

  const banner = el(doc, 'div', 'banner');
  const palette = el(doc, 'div', 'palette');
  const debounce = el(doc, 'div', 'debounce');
  const debounceFill = el(doc, 'div', 'debounce-fill');
  debounce.appendChild(debounceFill);
  const status = el(doc, 'div', 'status');
  const scene = el(doc, 'canvas', 'scene');
  scene.width = 480;
  scene.height = 360;
  const timeline = el(doc, 'canvas', 'timeline');
  timeline.width = 480;
  timeline.height = 60;
  const controls = el(doc, 'div', 'controls');
  const feed = el(doc, 'pre', 'feed');
  for (const node of [banner, palette, debounce, status, scene, timeline, controls, feed]) {
    root.appendChild(node);
  }

  const button = (label: string, onPress: () => void): HTMLButtonElement => {
    const b = el(doc, 'button', 'control', label);
    b.addEventListener('click', onPress);
    controls.appendChild(b);
    return b;
  };
  button('pause', () => client.pause());
  button('resume', () => client.resume());
  button('step 1', () => client.step(1));
  button('step 30', () => client.step(30));
  button('reset', () => client.reset());
  button('disturb: hold', () => client.disturb('hold'));
  button('disturb: loot', () => client.disturb('loot'));
  button('disturb: near', () => client.disturb('near'));
  const speed = el(doc, 'input', 'speed');
  speed.type = 'number';
  speed.step = '0.5';
  speed.value = '1';
  speed.addEventListener('change', () => {
    const x = Number(speed.value);
    if (Number.isFinite(x) && x > 0) client.setSpeed(x);
  });
  controls.appendChild(speed);

  doc.addEventListener('keydown', (e) => {
    if (e.key === ' ') {
      if (vm.snapshot?.paused) client.resume();
      else client.pause();
      e.preventDefault();
    } else if (e.key === 's') {
      client.step(1);
    }
  });

  let paletteSession: string | null = null;
  const buildPalette = (): void => {
    palette.textContent = '';
    if (vm.palette === null) return;
    for (const it of vm.palette.intentions) {
      const b = el(doc, 'button', 'intention', it.name);
      b.dataset['intentionId'] = String(it.id);
      b.addEventListener('pointerdown', () => client.pressIntention(it.id));
      b.addEventListener('pointerup', () => client.releaseIntention());
      b.addEventListener('pointerleave', () => {
        if (client.heldIntention === it.id) client.releaseIntention();
      });
      palette.appendChild(b);
    }
  };

  const sceneCtx = scene.getContext('2d');
  const timelineCtx = timeline.getContext('2d');
  const vp: Viewport = { width: scene.width, height: scene.height, world: DEFAULT_WORLD };

  const paint = (): void => {
    client.drain();
    if (vm.sessionId !== paletteSession) {
      paletteSession = vm.sessionId;
      buildPalette();
    }
    banner.textContent = vm.banner();
    banner.style.display = vm.banner() === '' ? 'none' : 'block';
    debounceFill.style.width = `${Math.round(vm.debounceProgress() * 100)}%`;

    const snap = vm.snapshot;
    if (snap !== null) {
      const parts = [
        `tick ${snap.tick}`,
        snap.paused ? 'paused' : `speed ×${snap.speed}`,
        `phase ${snap.phase}`,
        snap.skill === null ? 'no skill' : `skill ${vm.skillName(snap.skill)}`,
        `hands [${snap.world.occupancy.join(', ')}]`,
        snap.safety.safe
          ? 'safe'
          : `UNSAFE d=${snap.safety.distance?.toFixed(3) ?? '?'}`,
      ];
      status.textContent = parts.join('  |  ');
      if (sceneCtx !== null) drawScene(sceneCtx, snap, vp);
    }
    if (timelineCtx !== null) drawTimeline(timelineCtx, vm, timeline.width);

    const tail = vm.feed.slice(-12);
    feed.textContent = tail
      .map((e) => {
        const extras = Object.entries(e)
          .filter(([k]) => k !== 't' && k !== 'tick' && k !== 'kind')
          .map(([k, v]) => `${k}=${String(v)}`)
          .join(' ');
        return `${String(e.tick).padStart(6)}  ${e.kind}  ${extras}`;
      })
      .join('\n');

    requestAnimationFrame(paint);
  };

  client.connect(url);
  requestAnimationFrame(paint);
  return client;
}

/**
 * Resolve the session WebSocket URL from the page's query string:
 * `?server=host:port` (defaults to the page's own host, or
 * 127.0.0.1:8000 when opened from a file), `?session=id` to join an
 * existing session, `?scenario=name` to create a fresh one otherwise.
 */
async function resolveUrl(doc: Document): Promise<string> {
  const loc = doc.location;
  const params = new URLSearchParams(loc.search);
  const onHttp = loc.protocol.startsWith('http') && loc.host !== '';
  const server = params.get('server') ?? (onHttp ? loc.host : '127.0.0.1:8000');
  const secure = loc.protocol === 'https:';
  let session = params.get('session');
  if (session === null) {
    const res = await fetch(`${secure ? 'https' : 'http'}://${server}/sessions`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ scenario: params.get('scenario') ?? 'dining' }),
    });
    if (!res.ok) throw new Error(`session create failed: ${res.status}`);
    session = ((await res.json()) as { id: string }).id;
  }
  return `${secure ? 'wss' : 'ws'}://${server}/sessions/${session}/ws`;
}

if (typeof document !== 'undefined') {
  const root = document.getElementById('console');
  if (root !== null) {
    resolveUrl(document).then(
      (url) => mountConsole(document, root, url),
      (err: unknown) => {
        root.textContent = `cannot reach the session server: ${String(err)}`;
      },
    );
  }
}
