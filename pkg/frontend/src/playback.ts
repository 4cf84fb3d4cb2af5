/**
 * Flipbook playback clock. Media time advances along the session's trace
 * (piecewise linear in wall time); the current thumbnail is the one whose
 * sampling tick is nearest the current media time. The clock is driven by
 * tick(dt) so tests can run it against a fake timer.
 */
import { TraceSample } from './types.js';

export function mediaTimeAt(trace: TraceSample[], wall: number): number {
  if (trace.length === 0) return 0;
  if (wall <= trace[0].wall) return trace[0].media;
  for (let i = 1; i < trace.length; i++) {
    const a = trace[i - 1];
    const b = trace[i];
    if (wall <= b.wall) {
      const f = b.wall > a.wall ? (wall - a.wall) / (b.wall - a.wall) : 0;
      return a.media + f * (b.media - a.media);
    }
  }
  return trace[trace.length - 1].media;
}

export function speedAt(trace: TraceSample[], wall: number): number {
  if (trace.length === 0) return 1;
  for (let i = 0; i < trace.length - 1; i++) {
    if (wall < trace[i + 1].wall) return trace[i].speed;
  }
  return trace[trace.length - 1].speed;
}

/** Thumbnail index for a media time, given the track's sampling interval. */
export function thumbnailIndexFor(media: number, interval: number, count: number): number {
  if (count <= 0) return 0;
  const idx = Math.round(media / interval);
  return Math.min(Math.max(idx, 0), count - 1);
}

export interface PlaybackSnapshot {
  wall: number;
  media: number;
  speed: number;
  thumbnailIndex: number;
  playing: boolean;
  finished: boolean;
}

export class FlipbookClock {
  private wall = 0;
  private playing = false;

  constructor(
    private readonly trace: TraceSample[],
    private readonly interval: number,
    private readonly thumbnailCount: number,
  ) {}

  get summaryDuration(): number {
    return this.trace.length ? this.trace[this.trace.length - 1].wall : 0;
  }

  play(): void {
    if (!this.finished()) this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  /** Jump to a wall-clock position; media time follows the trace. */
  scrub(wall: number): void {
    this.wall = Math.min(Math.max(wall, 0), this.summaryDuration);
  }

  /** Advance by dt seconds of wall time when playing. */
  tick(dt: number): void {
    if (!this.playing) return;
    this.wall = Math.min(this.wall + dt, this.summaryDuration);
    if (this.finished()) this.playing = false;
  }

  finished(): boolean {
    return this.wall >= this.summaryDuration;
  }

  snapshot(): PlaybackSnapshot {
    const media = mediaTimeAt(this.trace, this.wall);
    return {
      wall: this.wall,
      media,
      speed: speedAt(this.trace, this.wall),
      thumbnailIndex: thumbnailIndexFor(media, this.interval, this.thumbnailCount),
      playing: this.playing,
      finished: this.finished(),
    };
  }
}
