import { describe, expect, it } from 'vitest';

import { show } from '../src/format.js';
import { preferredBands, renderTimeline, TimelineMismatchError } from '../src/timeline.js';
import { BLOCK, DURATION, plantedEdl, plantedTrack } from './fixtures.js';

const WIDTH = 960;

describe('timeline view model', () => {
  it('places the preferred band within one thumbnail width of ground truth', () => {
    const vm = renderTimeline(plantedTrack(), plantedEdl(), WIDTH);
    const bands = preferredBands(vm);
    expect(bands).toHaveLength(1);
    const px = (t: number) => (t / DURATION) * WIDTH;
    const tolerance = vm.thumbWidthPx + 1e-9;
    expect(Math.abs(bands[0].x - px(BLOCK[0]))).toBeLessThanOrEqual(tolerance);
    expect(
      Math.abs(bands[0].x + bands[0].width - px(BLOCK[1])),
    ).toBeLessThanOrEqual(tolerance);
  });

  it('aligns score cells with the planted block', () => {
    const vm = renderTimeline(plantedTrack(), plantedEdl(), WIDTH);
    const hot = vm.cells.filter((c) => c.score >= 0.5);
    expect(hot[0].index).toBe(BLOCK[0]);
    expect(hot[hot.length - 1].index).toBe(BLOCK[1]);
  });

  it('renders an all-background schedule as a single fast band', () => {
    const track = plantedTrack();
    track.scores.forEach((p) => (p.score = 0.0));
    const edl = plantedEdl();
    edl.entries = [{ start: 0, end: DURATION, speed: edl.fast_speed, kind: 'background' }];
    edl.summary_duration = DURATION / edl.fast_speed;
    const vm = renderTimeline(track, edl, WIDTH);
    expect(vm.bands).toHaveLength(1);
    expect(vm.bands[0].kind).toBe('background');
    expect(vm.bands[0].speed).toBe(edl.fast_speed);
    expect(vm.bands[0].width).toBeCloseTo(WIDTH, 6);
  });

  it('survives an empty track without crashing', () => {
    const track = plantedTrack();
    track.scores = [];
    track.duration = 0;
    const edl = plantedEdl();
    edl.entries = [];
    const vm = renderTimeline(track, edl, WIDTH);
    expect(vm.cells).toHaveLength(0);
    expect(vm.bands).toHaveLength(0);
  });

  it('rejects mismatched video ids', () => {
    const edl = plantedEdl();
    edl.video_id = 'other';
    expect(() => renderTimeline(plantedTrack(), edl, WIDTH)).toThrow(TimelineMismatchError);
  });

  it('hover labels echo payload numbers verbatim', () => {
    const track = plantedTrack();
    const edl = plantedEdl();
    const vm = renderTimeline(track, edl, WIDTH);
    const cell = vm.cells[200];
    expect(cell.label).toContain(show(track.scores[200].score));
    expect(cell.label).toContain(show(track.scores[200].t));
    const band = vm.bands[1];
    expect(band.label).toContain(show(edl.entries[1].start));
    expect(band.label).toContain(show(edl.entries[1].end));
    expect(band.label).toContain(show(edl.entries[1].speed));
  });
});
