// Gesture-to-command mapping. Drag-sphere mode turns pointer drags into
// spatial angular-velocity commands (rotation axis of the great circle the
// drag traces, magnitude proportional to drag speed, clamped to 1 rad/s).
// Pose-emulation mode mirrors the controller-attitude interface with
// grab/pose messages; the server applies the command gain.

import { viewRotateInverse } from "./scene.js";
import type {
  CommandMessage,
  GrabMessage,
  PoseMessage,
  PressStartMessage,
  SetReferenceMessage,
} from "./wire.js";
import { assertValidMessage } from "./wire.js";
import { clampNorm, cross, dot, normalize, quatNorm, scale, type Quat, type Vec3 } from "./vec.js";

export const COMMAND_LIMIT = 1.0; // rad/s, matches the server-side saturation
export const MIN_SEND_INTERVAL_MS = 1000 / 120; // never above the loop rate

/** Unproject a screen point onto the front hemisphere of the view sphere. */
export function unprojectToSphere(
  x: number,
  y: number,
  sphere: { cx: number; cy: number; r: number },
): Vec3 {
  let nx = (x - sphere.cx) / sphere.r;
  let nz = -(y - sphere.cy) / sphere.r;
  const planar = nx * nx + nz * nz;
  if (planar > 1) {
    const s = 1 / Math.sqrt(planar);
    nx *= s;
    nz *= s;
  }
  const depth = -Math.sqrt(Math.max(0, 1 - nx * nx - nz * nz));
  return viewRotateInverse([nx, depth, nz]);
}

export class CommandSource {
  private seq = 0;
  private lastSentMs = -Infinity;

  /** Strictly increasing per connection; a reconnect makes a fresh source. */
  nextSeq(): number {
    return this.seq++;
  }

  private stamp(nowMs: number): void {
    this.lastSentMs = nowMs;
  }

  private rateLimited(nowMs: number): boolean {
    return nowMs - this.lastSentMs < MIN_SEND_INTERVAL_MS;
  }

  /**
   * Convert one drag step into a command message, or null when the gesture is
   * degenerate or faster than the 120 Hz send budget.
   */
  dragCommand(
    from: { x: number; y: number },
    to: { x: number; y: number },
    dtMs: number,
    sphere: { cx: number; cy: number; r: number },
    nowMs: number,
  ): CommandMessage | null {
    if (dtMs <= 0 || this.rateLimited(nowMs)) {
      return null;
    }
    const p0 = unprojectToSphere(from.x, from.y, sphere);
    const p1 = unprojectToSphere(to.x, to.y, sphere);
    const axis = cross(p0, p1);
    const sinAngle = Math.hypot(...axis);
    if (sinAngle < 1e-9) {
      return null;
    }
    const angle = Math.atan2(sinAngle, Math.max(-1, Math.min(1, dot(p0, p1))));
    const omega = clampNorm(scale(normalize(axis), angle / (dtMs / 1000)), COMMAND_LIMIT);
    this.stamp(nowMs);
    const msg: CommandMessage = { v: 1, type: "command", seq: this.nextSeq(), omega_h_s: omega };
    assertValidMessage(msg);
    return msg;
  }

  /** Pointer release sends an explicit zero command. */
  releaseCommand(nowMs: number): CommandMessage {
    this.stamp(nowMs);
    const msg: CommandMessage = { v: 1, type: "command", seq: this.nextSeq(), omega_h_s: [0, 0, 0] };
    assertValidMessage(msg);
    return msg;
  }

  grabMessage(q: Quat): GrabMessage {
    if (Math.abs(quatNorm(q) - 1) > 1e-6) {
      throw new Error("grab quaternion must be unit-norm");
    }
    const msg: GrabMessage = { v: 1, type: "grab", r0_quat: q };
    assertValidMessage(msg);
    return msg;
  }

  poseMessage(q: Quat): PoseMessage {
    if (Math.abs(quatNorm(q) - 1) > 1e-6) {
      throw new Error("pose quaternion must be unit-norm");
    }
    const msg: PoseMessage = { v: 1, type: "pose", rt_quat: q };
    assertValidMessage(msg);
    return msg;
  }

  pressStart(): PressStartMessage {
    const msg: PressStartMessage = { v: 1, type: "press_start" };
    assertValidMessage(msg);
    return msg;
  }

  setReference(dR: Vec3): SetReferenceMessage {
    const msg: SetReferenceMessage = { v: 1, type: "set_reference", d_r: normalize(dR) };
    assertValidMessage(msg);
    return msg;
  }
}
