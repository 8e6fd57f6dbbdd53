import { describe, expect, it } from "vitest";
import { buildScene, project, viewRotate, viewRotateInverse } from "../src/scene.js";
import { unprojectToSphere } from "../src/input.js";
import { ViewStore } from "../src/state.js";
import type { StateMessage } from "../src/wire.js";
import { norm, type Vec3 } from "../src/vec.js";

function stateMsg(over: Partial<StateMessage> = {}): StateMessage {
  return {
    v: 1,
    type: "state",
    t: 1.0,
    d_l: [0, 0, 1],
    d_r: [0, 0, 1],
    d_bar: [0, 0, 1],
    R_l_quat: [1, 0, 0, 0],
    bodies_quat: [[1, 0, 0, 0], [1, 0, 0, 0]],
    error_norm: 0,
    trial_id: 0,
    ...over,
  };
}

describe("view rotation", () => {
  it("is inverted exactly by viewRotateInverse", () => {
    const v: Vec3 = [0.3, -0.5, 0.81];
    const back = viewRotateInverse(viewRotate(v));
    expect(norm([back[0] - v[0], back[1] - v[1], back[2] - v[2]])).toBeLessThan(1e-12);
  });

  it("unprojects projected front-hemisphere points", () => {
    const sphere = { cx: 450, cy: 320, r: 240 };
    const p: Vec3 = viewRotateInverse([0.3, -Math.sqrt(1 - 0.3 * 0.3 - 0.2 * 0.2), 0.2]);
    const screen = project(p, sphere);
    const back = unprojectToSphere(screen.x, screen.y, sphere);
    expect(norm([back[0] - p[0], back[1] - p[1], back[2] - p[2]])).toBeLessThan(1e-9);
  });
});

describe("scene building", () => {
  it("shows a banner and no arrows before any state arrives", () => {
    const store = new ViewStore();
    const scene = buildScene(store, 900, 640, 0);
    expect(scene.arrows).toHaveLength(0);
    expect(scene.banner).toBe("disconnected");
  });

  it("places arrows exactly at the streamed vectors", () => {
    const store = new ViewStore();
    const msg = stateMsg({
      d_l: [0.6, 0, 0.8],
      d_r: [0, 0.6, 0.8],
      d_bar: [0.6, 0.01, 0.79],
    });
    expect(store.applyServerMessage(msg, 100)).toBe(true);
    const scene = buildScene(store, 900, 640, 120);
    const byLabel = Object.fromEntries(scene.arrows.map((a) => [a.label, a]));
    expect(byLabel["d_l"]!.tip3d).toEqual(msg.d_l);
    expect(byLabel["d_r"]!.tip3d).toEqual(msg.d_r);
    expect(byLabel["d_bar"]!.tip3d).toEqual(msg.d_bar);
    expect(byLabel["body0"]).toBeDefined();
    expect(byLabel["body1"]).toBeDefined();
    expect(scene.banner).toBeNull();
    expect(scene.hud).toEqual({ trialId: 0, t: 1.0, errorNorm: 0 });
  });

  it("draws coincident arrows when the leader reaches the reference", () => {
    const store = new ViewStore();
    store.applyServerMessage(stateMsg(), 0);
    const scene = buildScene(store, 900, 640, 10);
    const byLabel = Object.fromEntries(scene.arrows.map((a) => [a.label, a]));
    expect(byLabel["d_l"]!.to).toEqual(byLabel["d_r"]!.to);
  });

  it("flags stale state after one second without messages", () => {
    const store = new ViewStore();
    store.applyServerMessage(stateMsg(), 1000);
    expect(buildScene(store, 900, 640, 1900).banner).toBeNull();
    expect(buildScene(store, 900, 640, 2100).banner).toBe("disconnected");
  });

  it("drops invalid messages without touching the view", () => {
    const store = new ViewStore();
    store.applyServerMessage(stateMsg(), 0);
    const before = store.lastState;
    expect(store.applyServerMessage({ v: 1, type: "state", t: "soon" }, 10)).toBe(false);
    expect(store.rejectedMessages).toBe(1);
    expect(store.lastState).toBe(before);
  });

  it("keeps only the last 30 seconds in the error sparkline", () => {
    const store = new ViewStore();
    for (let k = 0; k < 45 * 20; k++) {
      store.applyServerMessage(stateMsg({ t: k / 20, error_norm: 1 }), k * 50);
    }
    const samples = store.history.samples();
    expect(samples[0]!.t).toBeGreaterThanOrEqual(samples[samples.length - 1]!.t - 30);
  });
});
