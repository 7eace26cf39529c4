/** Trailing-edge debouncer: rapid schedule() calls collapse into a single
 * invocation after the delay elapses with no further activity. Keeps slider
 * drags down to one request per settle. */

export class Debouncer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private delayMs: number) {}

  schedule(fn: () => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  get pending(): boolean {
    return this.timer !== null;
  }
}
