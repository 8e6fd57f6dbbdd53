import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { validateMessage } from "../src/wire.js";

describe("wire message validation", () => {
  it("keeps the schema copy in sync with the canonical file", () => {
    const here = path.dirname(new URL(import.meta.url).pathname);
    const copy = JSON.parse(fs.readFileSync(path.join(here, "../schema/wire_messages.schema.json"), "utf-8"));
    const canonical = JSON.parse(
      fs.readFileSync(path.join(here, "../../src/so3nav/wire_messages.schema.json"), "utf-8"),
    );
    expect(copy).toEqual(canonical);
  });

  it("accepts well-formed client messages", () => {
    expect(validateMessage({ v: 1, type: "command", seq: 0, omega_h_s: [0.1, 0, 0] })).toBe(true);
    expect(validateMessage({ v: 1, type: "grab", r0_quat: [1, 0, 0, 0] })).toBe(true);
    expect(validateMessage({ v: 1, type: "pose", rt_quat: [1, 0, 0, 0] })).toBe(true);
    expect(validateMessage({ v: 1, type: "press_start" })).toBe(true);
    expect(validateMessage({ v: 1, type: "set_reference", d_r: [0, 0, 1] })).toBe(true);
  });

  it("accepts well-formed state messages", () => {
    expect(
      validateMessage({
        v: 1,
        type: "state",
        t: 0.5,
        d_l: [0, 0, 1],
        d_r: [0, 0, 1],
        d_bar: [0, 0, 1],
        R_l_quat: [1, 0, 0, 0],
        bodies_quat: [[1, 0, 0, 0]],
        error_norm: 0,
        trial_id: 0,
      }),
    ).toBe(true);
  });

  it("rejects malformed messages", () => {
    expect(validateMessage({ v: 1, type: "command", omega_h_s: [0.1, 0, 0] })).toBe(false); // no seq
    expect(validateMessage({ v: 2, type: "press_start" })).toBe(false); // wrong version
    expect(validateMessage({ v: 1, type: "command", seq: 1, omega_h_s: [1, 2] })).toBe(false);
    expect(validateMessage({ v: 1, type: "command", seq: -1, omega_h_s: [0, 0, 0] })).toBe(false);
    expect(validateMessage({ v: 1, type: "warp", factor: 9 })).toBe(false);
    expect(validateMessage({ v: 1, type: "command", seq: 0, omega_h_s: [0, 0, 0], extra: 1 })).toBe(false);
  });
});
