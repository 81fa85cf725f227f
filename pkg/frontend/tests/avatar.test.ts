import { describe, expect, it } from "vitest";

import { avatarColor, avatarInitials, avatarSvg, hashString } from "../src/avatar.js";

describe("avatar placeholders", () => {
  it("hashes deterministically", () => {
    expect(hashString("tired_economist")).toBe(hashString("tired_economist"));
    expect(hashString("tired_economist")).not.toBe(hashString("salty_barista"));
  });

  it("same username renders the same svg", () => {
    expect(avatarSvg("quiet_nurse")).toBe(avatarSvg("quiet_nurse"));
  });

  it("derives initials from handle segments", () => {
    expect(avatarInitials("tired_economist")).toBe("TE");
    expect(avatarInitials("participant")).toBe("PA");
    expect(avatarInitials("")).toBe("?");
  });

  it("color stays inside hsl range", () => {
    for (const name of ["a", "bb", "ccc", "participant2"]) {
      const match = avatarColor(name).match(/^hsl\((\d+), 55%, 45%\)$/);
      expect(match).not.toBeNull();
      expect(Number(match![1])).toBeLessThan(360);
    }
  });
});
