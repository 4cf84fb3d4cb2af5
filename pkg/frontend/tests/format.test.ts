import { describe, expect, it } from 'vitest';
import { readFileSync, readdirSync } from 'node:fs';
import { join } from 'node:path';

import { seconds, show, speed } from '../src/format.js';
import { plantedSession } from './fixtures.js';

describe('verbatim number display', () => {
  it('show() is byte-identical JSON serialization of the payload value', () => {
    const session = plantedSession();
    const edl = session.edl!;
    expect(show(edl.summary_duration)).toBe(JSON.stringify(128.375));
    expect(show(edl.fast_speed)).toBe(JSON.stringify(8));
    expect(show(session.track!.duration)).toBe(JSON.stringify(600));
    expect(show(session.track!.scores[200].score)).toBe(JSON.stringify(0.9987));
    expect(show(session.metrics_ms!.analyze)).toBe(JSON.stringify(900.25));
  });

  it('unit labels wrap the verbatim value without touching it', () => {
    expect(seconds(128.375)).toBe('128.375 s');
    expect(speed(8)).toBe('8x');
    expect(speed(1)).toBe('1x');
  });

  it('never rounds or rescales', () => {
    const awkward = 0.30000000000000004;
    expect(show(awkward)).toBe(JSON.stringify(awkward));
  });
});

describe('division of labor', () => {
  it('the console contains no classification or scheduling code', () => {
    // the UI is a pure client of the edge API: no model math, no segment
    // arithmetic beyond drawing what the payload says
    const srcDir = join(__dirname, '..', 'src');
    const forbidden = [
      /softmax/i,
      /conv2d/i,
      /cross[_-]?entropy/i,
      /batchnorm/i,
      /zpool/i,
      /gradient/i,
      /segments?_from_track/i,
      /build_schedule/i,
    ];
    for (const file of readdirSync(srcDir)) {
      const text = readFileSync(join(srcDir, file), 'utf-8');
      for (const pattern of forbidden) {
        expect(pattern.test(text), `${file} matches ${pattern}`).toBe(false);
      }
    }
  });

  it('only the api module talks to the network', () => {
    const srcDir = join(__dirname, '..', 'src');
    for (const file of readdirSync(srcDir)) {
      if (file === 'api.ts') continue;
      const text = readFileSync(join(srcDir, file), 'utf-8');
      expect(/fetch\(/.test(text), `${file} calls fetch directly`).toBe(false);
    }
  });
});
