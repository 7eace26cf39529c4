import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer } from "../src/debounce.js";

describe("Debouncer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses a rapid burst into exactly one trailing call", () => {
    const debouncer = new Debouncer(150);
    let calls = 0;
    for (let i = 0; i < 10; i++) {
      debouncer.schedule(() => calls++);
      vi.advanceTimersByTime(50); // keeps resetting the window
    }
    expect(calls).toBe(0);
    vi.advanceTimersByTime(150);
    expect(calls).toBe(1);
  });

  it("fires again for a second burst", () => {
    const debouncer = new Debouncer(150);
    let calls = 0;
    debouncer.schedule(() => calls++);
    vi.advanceTimersByTime(150);
    debouncer.schedule(() => calls++);
    vi.advanceTimersByTime(150);
    expect(calls).toBe(2);
  });

  it("cancel drops the pending call", () => {
    const debouncer = new Debouncer(150);
    let calls = 0;
    debouncer.schedule(() => calls++);
    expect(debouncer.pending).toBe(true);
    debouncer.cancel();
    vi.advanceTimersByTime(500);
    expect(calls).toBe(0);
    expect(debouncer.pending).toBe(false);
  });
});
