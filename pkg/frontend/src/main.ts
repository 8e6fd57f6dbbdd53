// Browser entry point: connect to the session service, render at 60 fps from
// the 20 Hz state stream, and map pointer gestures to commands.
// Query parameter ?server=host:port picks the service endpoint.

import { buildScene } from "./scene.js";
import { draw } from "./render.js";
import { SessionClient } from "./net.js";
import { ViewStore } from "./state.js";
import { quatFromAxisAngle, quatMultiply, type Quat } from "./vec.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const store = new ViewStore();

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? window.location.host;
const client = new SessionClient(`ws://${server}/session`, store);
client.connect();

let dragging = false;
let lastPointer: { x: number; y: number; t: number } | null = null;
let poseQuat: Quat = [1, 0, 0, 0];

function sphereGeom() {
  return buildScene(store, canvas.width, canvas.height, Date.now()).sphere;
}

canvas.addEventListener("pointerdown", (ev) => {
  if (store.inputMode === "drag-sphere") {
    dragging = true;
    lastPointer = { x: ev.offsetX, y: ev.offsetY, t: performance.now() };
  } else {
    // pose emulation: the press is the grab, pointer motion tilts the pose
    poseQuat = [1, 0, 0, 0];
    client.send(client.source.grabMessage(poseQuat));
  }
});

canvas.addEventListener("pointermove", (ev) => {
  const now = performance.now();
  if (store.inputMode === "drag-sphere") {
    if (!dragging || !lastPointer) {
      return;
    }
    const msg = client.source.dragCommand(
      lastPointer,
      { x: ev.offsetX, y: ev.offsetY },
      now - lastPointer.t,
      sphereGeom(),
      now,
    );
    if (msg) {
      store.commandPreview = msg.omega_h_s;
      client.send(msg);
      lastPointer = { x: ev.offsetX, y: ev.offsetY, t: now };
    }
  } else if (ev.buttons) {
    const dx = ev.movementX * 0.005;
    const dy = ev.movementY * 0.005;
    poseQuat = quatMultiply(quatFromAxisAngle([0, 0, 1], -dx), poseQuat);
    poseQuat = quatMultiply(quatFromAxisAngle([1, 0, 0], -dy), poseQuat);
    client.send(client.source.poseMessage(poseQuat));
  }
});

function endDrag() {
  if (dragging) {
    dragging = false;
    lastPointer = null;
    store.commandPreview = [0, 0, 0];
    client.send(client.source.releaseCommand(performance.now()));
  }
}
canvas.addEventListener("pointerup", endDrag);
canvas.addEventListener("pointerleave", endDrag);

document.getElementById("press-start")?.addEventListener("click", () => {
  client.send(client.source.pressStart());
});

document.getElementById("mode")?.addEventListener("change", (ev) => {
  store.inputMode = (ev.target as HTMLSelectElement).value as typeof store.inputMode;
});

function frame() {
  const scene = buildScene(store, canvas.width, canvas.height, Date.now());
  draw(ctx, scene);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
