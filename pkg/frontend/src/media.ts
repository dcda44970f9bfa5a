/**
 * Playback model for the media pane.
 *
 * The media starts when the server's Start message arrives and plays at
 * the editor's assigned audio delay behind the live transcript. The only
 * user-facing control is volume; there is deliberately no seeking.
 */

export interface StartPayload {
  clock_origin_ms: number;
  audio_delay_s: number;
}

export class MediaModel {
  private originMs: number | null = null;
  private delayS = 0;
  volume = 1.0;

  start(payload: StartPayload): void {
    this.originMs = payload.clock_origin_ms;
    this.delayS = payload.audio_delay_s;
  }

  get started(): boolean {
    return this.originMs !== null;
  }

  /** Seconds of live transcript elapsed at the server. */
  serverElapsedS(nowMs: number): number {
    if (this.originMs === null) return 0;
    return Math.max(0, (nowMs - this.originMs) / 1000);
  }

  /** Current media playhead in seconds (lags the server by the delay). */
  positionS(nowMs: number): number {
    return Math.max(0, this.serverElapsedS(nowMs) - this.delayS);
  }

  /** How far the media lags the live transcript, in seconds. */
  offsetS(nowMs: number): number {
    return this.serverElapsedS(nowMs) - this.positionS(nowMs);
  }

  setVolume(v: number): void {
    this.volume = Math.min(1, Math.max(0, v));
  }

  /** Seeking is not exposed; any attempt is ignored. */
  seek(_positionS: number): void {
    // no-op by design
  }
}
