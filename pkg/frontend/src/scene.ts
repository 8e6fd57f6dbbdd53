// Pure scene construction: ViewState in, drawable primitives out. The canvas
// painter consumes the result; tests inspect it directly.

import type { ViewStore } from "./state.js";
import { quatRotate, type Vec3 } from "./vec.js";

export interface Projected {
  x: number;
  y: number;
  depth: number;
}

export interface SceneArrow {
  label: string;
  color: string;
  tip3d: Vec3;
  from: Projected;
  to: Projected;
}

export interface SceneGraph {
  viewport: { w: number; h: number };
  sphere: { cx: number; cy: number; r: number };
  arrows: SceneArrow[];
  sparkline: { x: number; y: number }[];
  banner: string | null;
  hud: { trialId: number; t: number; errorNorm: number } | null;
  commandPreview: Vec3;
}

// fixed isometric-ish view: yaw then pitch, orthographic drop of view depth
const YAW = Math.PI / 6;
const PITCH = Math.PI / 9;
const CY = Math.cos(YAW);
const SY = Math.sin(YAW);
const CP = Math.cos(PITCH);
const SP = Math.sin(PITCH);

export function viewRotate(v: Vec3): Vec3 {
  const x1 = CY * v[0] + SY * v[1];
  const y1 = -SY * v[0] + CY * v[1];
  const z1 = v[2];
  return [x1, CP * y1 - SP * z1, SP * y1 + CP * z1];
}

/** Inverse of viewRotate; used by the input unprojection. */
export function viewRotateInverse(v: Vec3): Vec3 {
  const y1 = CP * v[1] + SP * v[2];
  const z1 = -SP * v[1] + CP * v[2];
  return [CY * v[0] - SY * y1, SY * v[0] + CY * y1, z1];
}

export function project(v: Vec3, sphere: { cx: number; cy: number; r: number }): Projected {
  const p = viewRotate(v);
  return { x: sphere.cx + sphere.r * p[0], y: sphere.cy - sphere.r * p[2], depth: p[1] };
}

const ARROW_COLORS: Record<string, string> = {
  d_l: "#2563eb",
  d_r: "#16a34a",
  d_bar: "#f59e0b",
};

const E3: Vec3 = [0, 0, 1];

export function buildScene(view: ViewStore, w: number, h: number, nowMs: number): SceneGraph {
  const sphere = { cx: w * 0.5, cy: h * 0.5, r: Math.min(w, h) * 0.38 };
  const scene: SceneGraph = {
    viewport: { w, h },
    sphere,
    arrows: [],
    sparkline: [],
    banner: null,
    hud: null,
    commandPreview: view.commandPreview,
  };
  if (view.connection === "disconnected" || view.isStale(nowMs)) {
    scene.banner = "disconnected";
  }
  const st = view.lastState;
  if (!st) {
    return scene;
  }
  const origin = project([0, 0, 0], sphere);
  const mainArrows: [string, Vec3][] = [
    ["d_l", st.d_l],
    ["d_r", st.d_r],
    ["d_bar", st.d_bar],
  ];
  for (const [label, tip] of mainArrows) {
    scene.arrows.push({
      label,
      color: ARROW_COLORS[label] ?? "#888",
      tip3d: tip,
      from: origin,
      to: project(tip, sphere),
    });
  }
  st.bodies_quat.forEach((q, i) => {
    const tip = quatRotate(q, E3);
    scene.arrows.push({
      label: `body${i}`,
      color: "#9ca3af",
      tip3d: tip,
      from: origin,
      to: project(tip, sphere),
    });
  });

  const samples = view.history.samples();
  if (samples.length > 1) {
    const t1 = samples[samples.length - 1]!.t;
    const t0 = t1 - 30;
    const boxX = w * 0.05;
    const boxW = w * 0.9;
    const boxY = h * 0.94;
    const boxH = h * 0.05;
    const maxErr = Math.max(2, ...samples.map((s) => s.errorNorm));
    scene.sparkline = samples.map((s) => ({
      x: boxX + (boxW * (s.t - t0)) / 30,
      y: boxY + boxH * (1 - s.errorNorm / maxErr),
    }));
  }
  scene.hud = { trialId: st.trial_id, t: st.t, errorNorm: st.error_norm };
  return scene;
}
