/**
 * Session polling: one in-flight summarize per video, a 500 ms poll loop
 * until the session leaves the running state. Timer functions are
 * injectable so tests drive the loop deterministically.
 */
import { SessionDoc } from './types.js';

export const POLL_INTERVAL_MS = 500;

export interface Timers {
  setTimeout(fn: () => void, ms: number): number;
  clearTimeout(id: number): void;
}

export class SessionPoller {
  private inFlight = new Set<string>();

  constructor(
    private readonly fetchSession: (id: string) => Promise<SessionDoc>,
    private readonly timers: Timers = globalThis as unknown as Timers,
  ) {}

  /** True while a summarize for this video has not finished polling. */
  busy(videoId: string): boolean {
    return this.inFlight.has(videoId);
  }

  async poll(
    videoId: string,
    sessionId: string,
    onUpdate: (doc: SessionDoc) => void,
  ): Promise<SessionDoc> {
    if (this.inFlight.has(videoId)) {
      throw new Error(`a summarize request for ${videoId} is already in flight`);
    }
    this.inFlight.add(videoId);
    try {
      for (;;) {
        const doc = await this.fetchSession(sessionId);
        onUpdate(doc);
        if (doc.status !== 'running') return doc;
        await new Promise<void>((resolve) =>
          this.timers.setTimeout(() => resolve(), POLL_INTERVAL_MS),
        );
      }
    } finally {
      this.inFlight.delete(videoId);
    }
  }
}
