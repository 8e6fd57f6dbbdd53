// Canvas painter for a SceneGraph. Kept as thin as possible: all geometry
// decisions live in scene.ts where they are testable.

import type { SceneGraph } from "./scene.js";

export function draw(ctx: CanvasRenderingContext2D, scene: SceneGraph): void {
  const { w, h } = scene.viewport;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#0b1220";
  ctx.fillRect(0, 0, w, h);

  const { cx, cy, r } = scene.sphere;
  ctx.strokeStyle = "#334155";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.stroke();
  // equator hint
  ctx.beginPath();
  ctx.ellipse(cx, cy, r, r * 0.3, 0, 0, 2 * Math.PI);
  ctx.stroke();

  const back = scene.arrows.filter((a) => a.to.depth > 0);
  const front = scene.arrows.filter((a) => a.to.depth <= 0);
  for (const arrow of [...back, ...front]) {
    ctx.strokeStyle = arrow.color;
    ctx.globalAlpha = arrow.to.depth > 0 ? 0.35 : 1.0;
    ctx.lineWidth = arrow.label.startsWith("body") ? 1.5 : 3;
    ctx.beginPath();
    ctx.moveTo(arrow.from.x, arrow.from.y);
    ctx.lineTo(arrow.to.x, arrow.to.y);
    ctx.stroke();
    ctx.fillStyle = arrow.color;
    ctx.beginPath();
    ctx.arc(arrow.to.x, arrow.to.y, arrow.label.startsWith("body") ? 3 : 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.globalAlpha = 1.0;
    if (!arrow.label.startsWith("body")) {
      ctx.font = "12px monospace";
      ctx.fillText(arrow.label, arrow.to.x + 8, arrow.to.y);
    }
  }

  if (scene.sparkline.length > 1) {
    ctx.strokeStyle = "#f87171";
    ctx.lineWidth = 1;
    ctx.beginPath();
    scene.sparkline.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
    ctx.stroke();
  }

  ctx.fillStyle = "#e5e7eb";
  ctx.font = "13px monospace";
  if (scene.hud) {
    ctx.fillText(
      `trial ${scene.hud.trialId}  t=${scene.hud.t.toFixed(1)}s  |d_l - d_r|=${scene.hud.errorNorm.toFixed(3)}`,
      12,
      18,
    );
  }
  if (scene.banner) {
    ctx.fillStyle = "#ef4444";
    ctx.font = "bold 16px monospace";
    ctx.fillText(scene.banner.toUpperCase(), scene.viewport.w / 2 - 60, 30);
  }
}
