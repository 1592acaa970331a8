/** Polls the matrix and its diagnosis on a fixed cadence. At most one
 * request pair is in flight at a time; a tick that finds the previous
 * one still pending skips its turn instead of piling on. Failures back
 * the cadence off exponentially (capped) and, once two polls in a row
 * have failed, flag the sink as stale. The last good snapshot is never
 * discarded: on failure the sink simply is not updated. */

export interface MatrixSource {
  matrix(): Promise<unknown>;
  diagnosis(): Promise<unknown>;
}

export interface PollSink {
  update(matrix: unknown, diagnosis: unknown): void;
  stale(isStale: boolean): void;
}

export class MatrixPoller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private failures = 0;
  private running = false;

  constructor(
    private source: MatrixSource,
    private sink: PollSink,
    private intervalMs = 2000,
    private maxBackoff = 8,
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.tick();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  private schedule(): void {
    if (!this.running) return;
    const factor = Math.min(2 ** this.failures, this.maxBackoff);
    this.timer = setTimeout(() => void this.tick(), this.intervalMs * factor);
  }

  private async tick(): Promise<void> {
    this.schedule();
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const matrix = await this.source.matrix();
      const diagnosis = await this.source.diagnosis();
      this.failures = 0;
      this.sink.stale(false);
      this.sink.update(matrix, diagnosis);
    } catch {
      this.failures += 1;
      if (this.failures >= 2) this.sink.stale(true);
    } finally {
      this.inFlight = false;
    }
  }
}
