// End-to-end client loop against the fixture service: canned trajectory in,
// scripted drags out, rendered arrows always within one stream frame of the
// streamed truth, and a session export ready for the identification pipeline.

import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { DT, FixtureSession, RATE, SESSION_COLUMNS } from "./fixture_server.js";
import { buildScene } from "../src/scene.js";
import { CommandSource } from "../src/input.js";
import { ViewStore } from "../src/state.js";
import { validateMessage } from "../src/wire.js";
import { norm } from "../src/vec.js";

const OUT_DIR = path.join(path.dirname(new URL(import.meta.url).pathname), "../test-output");

describe("scripted session against the fixture service", () => {
  it("tracks streamed state, sends valid commands, and exports a session log", () => {
    const fixture = new FixtureSession();
    const store = new ViewStore();
    const source = new CommandSource();
    const durationS = 20;
    const nTicks = durationS * RATE;

    // scripted drag: circular pointer path while the button is held
    const sphere = { cx: 450, cy: 320, r: 240 };
    const dragWindows: [number, number][] = [
      [2, 8],
      [11, 16],
    ];
    let pointer = { x: 430, y: 320 };
    let lastSeq = -1;
    let sentCommands = 0;

    for (let k = 0; k < nTicks; k++) {
      if (fixture.shouldStream()) {
        const msg = fixture.stateMessage();
        const nowMs = (k * 1000) / RATE;
        expect(store.applyServerMessage(msg, nowMs)).toBe(true);

        // the rendered arrows match this frame's truth exactly
        const scene = buildScene(store, 900, 640, nowMs);
        const byLabel = Object.fromEntries(scene.arrows.map((a) => [a.label, a]));
        expect(byLabel["d_l"]!.tip3d).toEqual(msg.d_l);
        expect(byLabel["d_r"]!.tip3d).toEqual(msg.d_r);
        expect(byLabel["d_bar"]!.tip3d).toEqual(msg.d_bar);
        expect(scene.banner).toBeNull();

        const t = k * DT;
        const inWindow = dragWindows.some(([a, b]) => t >= a && t < b);
        if (inWindow) {
          const angle = 0.22 * t;
          const next = {
            x: sphere.cx + 60 * Math.cos(angle),
            y: sphere.cy + 60 * Math.sin(angle),
          };
          const cmd = source.dragCommand(pointer, next, 1000 / 20, sphere, nowMs);
          pointer = next;
          if (cmd) {
            expect(validateMessage(cmd)).toBe(true);
            expect(norm(cmd.omega_h_s)).toBeLessThanOrEqual(1.0 + 1e-12);
            expect(cmd.seq).toBeGreaterThan(lastSeq);
            lastSeq = cmd.seq;
            fixture.receive(cmd);
            sentCommands += 1;
          }
        } else if (dragWindows.some(([, b]) => Math.abs(t - b) < DT)) {
          const release = source.releaseCommand(nowMs);
          expect(validateMessage(release)).toBe(true);
          fixture.receive(release);
        }
      }
      fixture.step();
    }

    expect(sentCommands).toBeGreaterThan(100);
    expect(fixture.rows).toHaveLength(nTicks);

    // the fixture applied nonzero commands while the drags were active
    const whsNorms = fixture.rows.map((r) => Math.hypot(r[5]!, r[6]!, r[7]!));
    expect(Math.max(...whsNorms)).toBeGreaterThan(0.01);
    expect(Math.max(...whsNorms)).toBeLessThanOrEqual(1.0 + 1e-12);

    const out = path.join(OUT_DIR, "ui_session.csv");
    fixture.exportSessionLog(out);
    const text = fs.readFileSync(out, "utf-8").trim().split("\n");
    expect(text[0]).toBe(SESSION_COLUMNS.join(","));
    expect(text).toHaveLength(nTicks + 1);
    // four complete trials at the fixture's 5 s period
    const trialCol = SESSION_COLUMNS.indexOf("trial_id");
    const trials = new Set(fixture.rows.map((r) => r[trialCol]));
    expect(trials.size).toBe(4);
  });

  it("rejects malformed client messages like the real service", () => {
    const fixture = new FixtureSession();
    expect(() => fixture.receive({ v: 1, type: "command", omega_h_s: [0, 0, 0] })).toThrow();
    expect(() => fixture.receive({ v: 1, type: "teleport" })).toThrow();
  });

  it("zeroes held commands after the 0.25 s timeout", () => {
    const fixture = new FixtureSession();
    fixture.receive({ v: 1, type: "command", seq: 0, omega_h_s: [0.4, 0, 0] });
    const holdTicks = Math.round(0.25 * RATE);
    for (let k = 0; k < holdTicks + 10; k++) {
      fixture.step();
    }
    const whs = fixture.rows.map((r) => r[5]!);
    expect(whs[0]).toBeCloseTo(0.4, 12);
    expect(whs[holdTicks]!).toBeCloseTo(0.4, 12);
    expect(whs[holdTicks + 2]!).toBe(0);
  });
});
