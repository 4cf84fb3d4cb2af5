/**
 * Timeline view model: one lane of per-thumbnail relevance scores and one
 * lane of colored speed bands, both in pixel space. Pure geometry; all
 * numbers pass through unchanged so hover labels echo the API payload.
 */
import { Edl, Track } from './types.js';
import { show, seconds, speed } from './format.js';

export interface ScoreCell {
  index: number;
  x: number;
  width: number;
  score: number;
  visited: boolean;
  /** hover text: verbatim score and timestamp */
  label: string;
}

export interface SpeedBand {
  x: number;
  width: number;
  kind: 'preferred' | 'background';
  speed: number;
  label: string;
}

export interface TimelineViewModel {
  videoId: string;
  widthPx: number;
  duration: number;
  /** pixel width of one sampling interval */
  thumbWidthPx: number;
  cells: ScoreCell[];
  bands: SpeedBand[];
}

export class TimelineMismatchError extends Error {}

export function renderTimeline(track: Track, edl: Edl, widthPx: number): TimelineViewModel {
  if (track.video_id !== edl.video_id) {
    throw new TimelineMismatchError(
      `track is for ${track.video_id} but schedule is for ${edl.video_id}`,
    );
  }
  const duration = track.duration > 0
    ? track.duration
    : track.scores.length > 0
      ? track.scores[track.scores.length - 1].t + track.interval
      : 0;
  const px = (t: number) => (duration > 0 ? (t / duration) * widthPx : 0);

  const cells: ScoreCell[] = track.scores.map((p) => ({
    index: p.index,
    x: px(p.t),
    width: Math.max(px(Math.min(p.t + track.interval, duration)) - px(p.t), 0),
    score: p.score,
    visited: p.visited,
    label: `t=${seconds(p.t)} score=${show(p.score)}`,
  }));

  const bands: SpeedBand[] = edl.entries.map((e) => ({
    x: px(e.start),
    width: px(e.end) - px(e.start),
    kind: e.kind,
    speed: e.speed,
    label: `[${show(e.start)}, ${show(e.end)}) ${speed(e.speed)} ${e.kind}`,
  }));

  return {
    videoId: track.video_id,
    widthPx,
    duration,
    thumbWidthPx: duration > 0 ? (track.interval / duration) * widthPx : 0,
    cells,
    bands,
  };
}

/** Bands of the preferred kind, for assertions and styling. */
export function preferredBands(vm: TimelineViewModel): SpeedBand[] {
  return vm.bands.filter((b) => b.kind === 'preferred');
}
