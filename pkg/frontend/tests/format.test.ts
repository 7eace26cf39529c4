import { describe, expect, it } from "vitest";

import { ortg, pct } from "../src/format.js";

describe("pct", () => {
  it("renders fractions as one-decimal percentages", () => {
    expect(pct(0.225)).toBe("22.5%");
    expect(pct(0)).toBe("0.0%");
    expect(pct(1)).toBe("100.0%");
  });

  it("rounds rather than truncates", () => {
    expect(pct(0.2255)).toBe("22.6%");
  });
});

describe("ortg", () => {
  it("displays to a tenth of a point", () => {
    expect(ortg(112.3456)).toBe("112.3");
    expect(ortg(99.95)).toBe("100.0");
  });
});
