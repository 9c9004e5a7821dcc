import { describe, expect, it } from "vitest";

import {
  CodecError,
  TAG,
  clampAngle,
  clampGripper,
  clampScaled,
  decodeAngle,
  decodeScaled,
  describeError,
  encodeAngle,
  encodeGripper,
  encodeScaled,
  formatLine,
  makeFrame,
  parseLine,
  poseTag,
} from "../src/codec.js";

describe("angle codec", () => {
  it("folds negatives past 1000, matching the joint-2 example", () => {
    expect(encodeAngle(-90)).toBe(1090);
    expect(formatLine(makeFrame(3002, encodeAngle(-90)))).toBe("3002 1090\n");
  });

  it("keeps non-negatives verbatim", () => {
    expect(encodeAngle(0)).toBe(0);
    expect(encodeAngle(180)).toBe(180);
  });

  it("round-trips every integer degree", () => {
    for (let d = -180; d <= 180; d += 1) {
      expect(decodeAngle(encodeAngle(d))).toBe(d);
    }
  });

  it("rejects out-of-range and fractional input", () => {
    expect(() => encodeAngle(181)).toThrow(CodecError);
    expect(() => encodeAngle(-181)).toThrow(CodecError);
    expect(() => encodeAngle(12.5)).toThrow(CodecError);
  });

  it("clamps slider readings into range", () => {
    expect(clampAngle(500)).toBe(180);
    expect(clampAngle(-500)).toBe(-180);
    expect(clampAngle(33)).toBe(33);
  });
});

describe("scaled codec", () => {
  it("encodes the x = 0.85 example at scale 100", () => {
    expect(encodeScaled(0.85, 100)).toBe(85);
    expect(formatLine(makeFrame(poseTag("x"), encodeScaled(0.85, 100)))).toBe("2001 85\n");
  });

  it("encodes the W = -0.71 example at scale 100", () => {
    expect(encodeScaled(-0.71, 100)).toBe(1071);
    expect(formatLine(makeFrame(poseTag("w"), encodeScaled(-0.71, 100)))).toBe("2007 1071\n");
  });

  it("round-trips within half a count at both scales", () => {
    for (const scale of [100, 1000] as const) {
      for (let i = 0; i < 2000; i += 1) {
        const real = (Math.random() * 2 - 1) * 9.99;
        const back = decodeScaled(encodeScaled(real, scale), scale);
        expect(Math.abs(back - real)).toBeLessThanOrEqual(0.5 / scale + 1e-12);
      }
    }
  });

  it("rejects magnitudes at or past ten units", () => {
    expect(() => encodeScaled(10.0, 100)).toThrow(CodecError);
    expect(() => encodeScaled(-10.0, 1000)).toThrow(CodecError);
  });

  it("clamps typed values to the representable bound", () => {
    expect(clampScaled(42, 100)).toBeCloseTo(9.99, 10);
    expect(clampScaled(-42, 1000)).toBeCloseTo(-9.999, 10);
    expect(encodeScaled(clampScaled(42, 100), 100)).toBe(999);
  });
});

describe("gripper codec", () => {
  it("is the identity on whole millimetres, per the 40 mm example", () => {
    expect(encodeGripper(40)).toBe(40);
    expect(formatLine(makeFrame(TAG.FINGER_RIGHT, encodeGripper(40)))).toBe("3102 40\n");
  });

  it("rejects out-of-range widths and clamps instead", () => {
    expect(() => encodeGripper(41)).toThrow(CodecError);
    expect(clampGripper(77)).toBe(40);
    expect(clampGripper(-3)).toBe(0);
  });
});

describe("line framing", () => {
  it("parses telemetry lines", () => {
    expect(parseLine("9001 15")).toEqual({ tag: 9001, value: 15 });
    expect(parseLine("9002 100\n")).toEqual({ tag: TAG.RTF, value: 100 });
  });

  it("rejects unknown tags, junk fields, and oversized values", () => {
    expect(() => parseLine("1234 1")).toThrow(CodecError);
    expect(() => parseLine("hello")).toThrow(CodecError);
    expect(() => parseLine("3001 1 2")).toThrow(CodecError);
    expect(() => parseLine("3001 65536")).toThrow(CodecError);
    expect(() => makeFrame(3001, -1)).toThrow(CodecError);
  });

  it("describes every bridge error code", () => {
    for (let code = 1; code <= 9; code += 1) {
      expect(describeError(code)).not.toContain("bridge error");
    }
    expect(describeError(42)).toContain("42");
  });
});
