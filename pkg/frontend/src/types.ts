/** Shapes of the edge-local API payloads the console consumes. */

export interface VideoSummary {
  video_id: string;
  title: string;
  duration: number;
  full_video_bytes: number;
  container_bytes: number;
  segment_count: number;
}

export interface TrackPoint {
  index: number;
  t: number;
  score: number;
  visited: boolean;
}

export interface Track {
  video_id: string;
  threshold: number;
  interval: number;
  duration: number;
  scores: TrackPoint[];
}

export interface EdlEntry {
  start: number;
  end: number;
  speed: number;
  kind: 'preferred' | 'background';
}

export interface Edl {
  video_id: string;
  fast_speed: number;
  summary_duration: number;
  entries: EdlEntry[];
}

export interface TraceSample {
  wall: number;
  media: number;
  speed: number;
}

export interface SessionDoc {
  session_id: string;
  video_id: string;
  status: 'running' | 'done' | 'error';
  error?: string;
  track?: Track;
  edl?: Edl;
  trace?: TraceSample[];
  metrics_ms?: Record<string, number>;
  stats?: Record<string, number>;
}

export interface ProfilePayload {
  categories: Record<string, number>;
  threshold: number;
}
