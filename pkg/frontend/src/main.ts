/** DOM wiring for the demo console. All logic lives in the pure modules;
 * this file only moves values between them and the page. */
import { EdgeApi, ApiError } from './api.js';
import { FlipbookClock } from './playback.js';
import { SessionPoller } from './poll.js';
import {
  ProfileDraft,
  canSubmit,
  draftErrors,
  emptyDraft,
  toPayload,
} from './profile.js';
import { renderTimeline, TimelineViewModel } from './timeline.js';
import { seconds, show, speed } from './format.js';
import { SessionDoc, VideoSummary } from './types.js';

const api = new EdgeApi('');
const poller = new SessionPoller((id) => api.session(id));

interface ConsoleState {
  videos: VideoSummary[];
  labels: string[];
  selectedVideo: string | null;
  draft: ProfileDraft;
  sessions: SessionDoc[]; // newest first; resubmission appends, old stay viewable
  activeSession: string | null;
  clock: FlipbookClock | null;
  raf: number | null;
}

const state: ConsoleState = {
  videos: [],
  labels: [],
  selectedVideo: null,
  draft: emptyDraft([]),
  sessions: [],
  activeSession: null,
  clock: null,
  raf: null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(message: string | null): void {
  const box = el<HTMLDivElement>('banner');
  box.textContent = message ?? '';
  box.style.display = message ? 'block' : 'none';
}

// ---------------------------------------------------------------------------
// preference panel

function renderProfilePanel(): void {
  const list = el<HTMLDivElement>('categories');
  list.replaceChildren();
  for (const cat of state.draft.categories) {
    const row = document.createElement('div');
    row.className = 'category-row';

    const toggle = document.createElement('input');
    toggle.type = 'checkbox';
    toggle.checked = cat.selected;
    toggle.addEventListener('change', () => {
      cat.selected = toggle.checked;
      renderSubmit();
    });

    const name = document.createElement('span');
    name.textContent = cat.name;

    const weight = document.createElement('input');
    weight.type = 'range';
    weight.min = '0';
    weight.max = '1';
    weight.step = '0.05';
    weight.value = String(cat.weight);
    const weightLabel = document.createElement('span');
    weightLabel.className = 'value';
    weightLabel.textContent = show(cat.weight);
    weight.addEventListener('input', () => {
      cat.weight = Number(weight.value);
      weightLabel.textContent = show(cat.weight);
      renderSubmit();
    });

    row.append(toggle, name, weight, weightLabel);
    list.append(row);
  }
  const threshold = el<HTMLInputElement>('threshold');
  threshold.value = String(state.draft.threshold);
  el<HTMLSpanElement>('threshold-value').textContent = show(state.draft.threshold);
  renderSubmit();
}

function renderSubmit(): void {
  const busy = state.selectedVideo ? poller.busy(state.selectedVideo) : false;
  const ok = state.selectedVideo !== null && canSubmit(state.draft, state.labels) && !busy;
  const button = el<HTMLButtonElement>('submit');
  button.disabled = !ok;
  button.textContent = busy ? 'Summarizing...' : 'Summarize';
}

// ---------------------------------------------------------------------------
// timeline

function drawTimeline(vm: TimelineViewModel): void {
  const canvas = el<HTMLCanvasElement>('timeline');
  const ctx = canvas.getContext('2d')!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scoreLaneH = 60;
  const bandLaneH = 24;

  for (const cell of vm.cells) {
    const h = Math.max(cell.score * scoreLaneH, cell.visited ? 1 : 0);
    ctx.fillStyle = cell.visited ? '#4a9eda' : '#2a3744';
    ctx.fillRect(cell.x, scoreLaneH - h, Math.max(cell.width - 0.5, 0.5), h);
  }
  for (const band of vm.bands) {
    ctx.fillStyle = band.kind === 'preferred' ? '#41c46a' : '#5a6470';
    ctx.fillRect(band.x, scoreLaneH + 6, band.width, bandLaneH);
  }

  canvas.onmousemove = (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * vm.widthPx;
    const cell = vm.cells.find((c) => x >= c.x && x < c.x + Math.max(c.width, 1));
    const band = vm.bands.find((b) => x >= b.x && x < b.x + b.width);
    el<HTMLDivElement>('hover').textContent =
      [cell?.label, band?.label].filter(Boolean).join('   ') || '';
  };
}

// ---------------------------------------------------------------------------
// flipbook

function attachFlipbook(doc: SessionDoc): void {
  if (state.raf !== null) cancelAnimationFrame(state.raf);
  const trace = doc.trace ?? [];
  const track = doc.track!;
  state.clock = new FlipbookClock(trace, track.interval, track.scores.length);

  const img = el<HTMLImageElement>('frame');
  const wall = el<HTMLInputElement>('scrub');
  wall.max = String(state.clock.summaryDuration);
  wall.step = '0.05';

  let lastShown = -1;
  let lastTime = performance.now();

  const update = () => {
    const clock = state.clock!;
    const now = performance.now();
    clock.tick((now - lastTime) / 1000);
    lastTime = now;
    const snap = clock.snapshot();
    if (snap.thumbnailIndex !== lastShown) {
      img.src = api.thumbnailUrl(doc.video_id, snap.thumbnailIndex);
      lastShown = snap.thumbnailIndex;
    }
    el<HTMLSpanElement>('speed-indicator').textContent = speed(snap.speed);
    el<HTMLSpanElement>('media-time').textContent = seconds(Number(snap.media.toFixed(2)));
    if (!wall.matches(':active')) wall.value = String(snap.wall);
    el<HTMLButtonElement>('play').textContent = snap.playing ? 'Pause' : 'Play';
    state.raf = requestAnimationFrame(update);
  };

  el<HTMLButtonElement>('play').onclick = () => {
    const clock = state.clock!;
    if (clock.snapshot().playing) {
      clock.pause();
    } else {
      if (clock.finished()) clock.scrub(0);
      lastTime = performance.now();
      clock.play();
    }
  };
  wall.oninput = () => state.clock!.scrub(Number(wall.value));

  state.raf = requestAnimationFrame(update);
}

// ---------------------------------------------------------------------------
// sessions

function renderSessionInfo(doc: SessionDoc): void {
  const edl = doc.edl!;
  el<HTMLSpanElement>('summary-duration').textContent = seconds(edl.summary_duration);
  el<HTMLSpanElement>('fast-speed').textContent = speed(edl.fast_speed);
  el<HTMLSpanElement>('video-duration').textContent = seconds(doc.track!.duration);
  const canvas = el<HTMLCanvasElement>('timeline');
  drawTimeline(renderTimeline(doc.track!, edl, canvas.width));
  attachFlipbook(doc);
}

function renderSessionList(): void {
  const list = el<HTMLUListElement>('sessions');
  list.replaceChildren();
  for (const doc of state.sessions) {
    const item = document.createElement('li');
    const link = document.createElement('a');
    link.href = '#';
    link.textContent = `${doc.session_id} (${doc.video_id}, ${doc.status})`;
    if (doc.session_id === state.activeSession) item.className = 'active';
    link.addEventListener('click', (ev) => {
      ev.preventDefault();
      state.activeSession = doc.session_id;
      if (doc.status === 'done') renderSessionInfo(doc);
      renderSessionList();
    });
    item.append(link);
    list.append(item);
  }
}

async function submit(): Promise<void> {
  const videoId = state.selectedVideo!;
  banner(null);
  const errors = draftErrors(state.draft, state.labels);
  if (errors.length) {
    banner(errors.join('; '));
    return;
  }
  try {
    const sessionId = await api.summarize(videoId, toPayload(state.draft));
    renderSubmit();
    const doc = await poller.poll(videoId, sessionId, (update) => {
      const i = state.sessions.findIndex((s) => s.session_id === sessionId);
      if (i >= 0) state.sessions[i] = update;
      else state.sessions.unshift(update);
      state.activeSession = sessionId;
      renderSessionList();
    });
    if (doc.status === 'error') {
      banner(`summarize failed: ${doc.error} (retry with different settings)`);
    } else {
      renderSessionInfo(doc);
    }
  } catch (err) {
    banner(err instanceof ApiError ? `${err.status}: ${err.message}` : String(err));
  } finally {
    renderSubmit();
  }
}

// ---------------------------------------------------------------------------
// boot

async function boot(): Promise<void> {
  try {
    const [videoDoc, labelDoc] = await Promise.all([api.videos(), api.labels()]);
    state.videos = videoDoc.videos;
    state.labels = labelDoc.labels;
    state.draft = emptyDraft(state.labels);

    const select = el<HTMLSelectElement>('video-select');
    select.replaceChildren();
    for (const v of state.videos) {
      const opt = document.createElement('option');
      opt.value = v.video_id;
      opt.textContent = `${v.title} (${show(v.duration)} s)`;
      select.append(opt);
    }
    state.selectedVideo = state.videos[0]?.video_id ?? null;
    select.onchange = () => {
      state.selectedVideo = select.value;
      renderSubmit();
    };

    const threshold = el<HTMLInputElement>('threshold');
    threshold.oninput = () => {
      state.draft.threshold = Number(threshold.value);
      el<HTMLSpanElement>('threshold-value').textContent = show(state.draft.threshold);
      renderSubmit();
    };
    el<HTMLButtonElement>('submit').onclick = () => void submit();
    renderProfilePanel();
  } catch (err) {
    banner(`cannot reach the edge API: ${String(err)}`);
  }
}

document.addEventListener('DOMContentLoaded', () => void boot());
