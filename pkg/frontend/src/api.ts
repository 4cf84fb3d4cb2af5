/** Fetch wrapper over the edge-local API; the console's only data source. */
import { ProfilePayload, SessionDoc, VideoSummary } from './types.js';

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      detail = ((await resp.json()) as { error?: string }).error ?? detail;
    } catch {
      /* not json */
    }
    throw new ApiError(detail, resp.status);
  }
  return (await resp.json()) as T;
}

export class EdgeApi {
  constructor(private readonly base: string = '') {}

  videos(): Promise<{ videos: VideoSummary[] }> {
    return getJson(`${this.base}/videos`);
  }

  labels(): Promise<{ labels: string[] }> {
    return getJson(`${this.base}/model`);
  }

  thumbnailUrl(videoId: string, index: number): string {
    return `${this.base}/videos/${videoId}/thumbnails/${index}`;
  }

  async summarize(videoId: string, profile: ProfilePayload): Promise<string> {
    const resp = await fetch(`${this.base}/summarize`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ video_id: videoId, profile }),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = ((await resp.json()) as { error?: string }).error ?? detail;
      } catch {
        /* not json */
      }
      throw new ApiError(detail, resp.status);
    }
    const doc = (await resp.json()) as { session_id: string };
    return doc.session_id;
  }

  session(sessionId: string): Promise<SessionDoc> {
    return getJson(`${this.base}/sessions/${sessionId}`);
  }
}
