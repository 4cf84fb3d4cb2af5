/** Canned session payload mirroring the planted-block run the backend's
 * acceptance suite produces: 600 s video, event block [200, 260], 1 s
 * sampling, preferred interval [200, 261), background at 8x. */
import { Edl, SessionDoc, Track, TraceSample } from '../src/types.js';

export const DURATION = 600;
export const INTERVAL = 1.0;
export const BLOCK: [number, number] = [200, 260];
export const FAST = 8.0;

export function plantedTrack(): Track {
  const scores = [];
  for (let i = 0; i <= DURATION; i++) {
    const inside = i >= BLOCK[0] && i <= BLOCK[1];
    scores.push({
      index: i,
      t: i * INTERVAL,
      score: inside ? 0.9987 : 0.0003,
      visited: true,
    });
  }
  return {
    video_id: 'planted',
    threshold: 0.5,
    interval: INTERVAL,
    duration: DURATION,
    scores,
  };
}

export function plantedEdl(): Edl {
  const preferredEnd = BLOCK[1] + INTERVAL; // 261: last positive tick + interval
  const summary =
    BLOCK[0] / FAST + (preferredEnd - BLOCK[0]) + (DURATION - preferredEnd) / FAST;
  return {
    video_id: 'planted',
    fast_speed: FAST,
    summary_duration: summary, // 128.375
    entries: [
      { start: 0, end: BLOCK[0], speed: FAST, kind: 'background' },
      { start: BLOCK[0], end: preferredEnd, speed: 1.0, kind: 'preferred' },
      { start: preferredEnd, end: DURATION, speed: FAST, kind: 'background' },
    ],
  };
}

/** Piecewise-linear trace sampled like the backend: fixed period plus an
 * exact final sample. */
export function plantedTrace(period = 0.5): TraceSample[] {
  const edl = plantedEdl();
  const breaks: Array<{ wall: number; media: number; speed: number }> = [];
  let wall = 0;
  for (const e of edl.entries) {
    breaks.push({ wall, media: e.start, speed: e.speed });
    wall += (e.end - e.start) / e.speed;
  }
  const summary = edl.summary_duration;
  const mediaAt = (w: number): { media: number; speed: number } => {
    for (let i = breaks.length - 1; i >= 0; i--) {
      if (w >= breaks[i].wall) {
        return {
          media: breaks[i].media + (w - breaks[i].wall) * breaks[i].speed,
          speed: breaks[i].speed,
        };
      }
    }
    return { media: 0, speed: breaks[0].speed };
  };
  const samples: TraceSample[] = [];
  for (let k = 0; k * period < summary; k++) {
    const w = k * period;
    const { media, speed } = mediaAt(w);
    samples.push({ wall: w, media, speed });
  }
  samples.push({ wall: summary, media: DURATION, speed: FAST });
  return samples;
}

export function plantedSession(): SessionDoc {
  return {
    session_id: 's0000',
    video_id: 'planted',
    status: 'done',
    track: plantedTrack(),
    edl: plantedEdl(),
    trace: plantedTrace(),
    metrics_ms: { fetch_container: 120.5, analyze: 900.25, schedule: 2.125, total: 1030.0 },
    stats: { downloaded_bytes: 4490000, full_video_bytes: 600000000 },
  };
}
