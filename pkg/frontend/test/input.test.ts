import { describe, expect, it } from "vitest";
import { CommandSource, COMMAND_LIMIT, MIN_SEND_INTERVAL_MS } from "../src/input.js";
import { dot, norm, normalize } from "../src/vec.js";

const SPHERE = { cx: 450, cy: 320, r: 240 };

describe("drag-sphere command mapping", () => {
  it("produces monotone sequence numbers and clamped magnitudes", () => {
    const src = new CommandSource();
    let now = 0;
    let lastSeq = -1;
    for (let k = 0; k < 50; k++) {
      now += 50;
      const msg = src.dragCommand(
        { x: 400 + k, y: 320 },
        { x: 404 + k, y: 318 },
        16,
        SPHERE,
        now,
      );
      expect(msg).not.toBeNull();
      expect(msg!.seq).toBeGreaterThan(lastSeq);
      lastSeq = msg!.seq;
      expect(norm(msg!.omega_h_s)).toBeLessThanOrEqual(COMMAND_LIMIT + 1e-12);
    }
  });

  it("keeps a constant direction for a straight constant-speed drag", () => {
    const src = new CommandSource();
    const a = src.dragCommand({ x: 380, y: 320 }, { x: 388, y: 320 }, 16, SPHERE, 100)!;
    const b = src.dragCommand({ x: 388, y: 320 }, { x: 396, y: 320 }, 16, SPHERE, 200)!;
    const da = normalize(a.omega_h_s);
    const db = normalize(b.omega_h_s);
    expect(dot(da, db)).toBeGreaterThan(0.999);
  });

  it("scales magnitude with drag speed until the clamp", () => {
    const src = new CommandSource();
    const slow = src.dragCommand({ x: 400, y: 320 }, { x: 402, y: 320 }, 40, SPHERE, 100)!;
    const fast = src.dragCommand({ x: 400, y: 320 }, { x: 410, y: 320 }, 40, SPHERE, 300)!;
    expect(norm(slow.omega_h_s)).toBeLessThan(norm(fast.omega_h_s));
    const flick = src.dragCommand({ x: 300, y: 320 }, { x: 600, y: 320 }, 8, SPHERE, 600)!;
    expect(norm(flick.omega_h_s)).toBeCloseTo(COMMAND_LIMIT, 12);
  });

  it("emits an explicit zero command on release", () => {
    const src = new CommandSource();
    const move = src.dragCommand({ x: 400, y: 320 }, { x: 420, y: 320 }, 16, SPHERE, 100)!;
    const release = src.releaseCommand(150);
    expect(release.omega_h_s).toEqual([0, 0, 0]);
    expect(release.seq).toBe(move.seq + 1);
  });

  it("rate-limits drag commands to the loop rate", () => {
    const src = new CommandSource();
    const first = src.dragCommand({ x: 400, y: 320 }, { x: 410, y: 320 }, 4, SPHERE, 100);
    expect(first).not.toBeNull();
    const tooSoon = src.dragCommand({ x: 410, y: 320 }, { x: 420, y: 320 }, 4, SPHERE, 100 + MIN_SEND_INTERVAL_MS / 2);
    expect(tooSoon).toBeNull();
    const later = src.dragCommand({ x: 410, y: 320 }, { x: 420, y: 320 }, 4, SPHERE, 100 + 2 * MIN_SEND_INTERVAL_MS);
    expect(later).not.toBeNull();
  });

  it("ignores degenerate drags", () => {
    const src = new CommandSource();
    expect(src.dragCommand({ x: 400, y: 320 }, { x: 400, y: 320 }, 16, SPHERE, 100)).toBeNull();
    expect(src.dragCommand({ x: 400, y: 320 }, { x: 410, y: 320 }, 0, SPHERE, 200)).toBeNull();
  });
});

describe("pose emulation messages", () => {
  it("builds valid grab and pose messages from unit quaternions", () => {
    const src = new CommandSource();
    expect(src.grabMessage([1, 0, 0, 0]).type).toBe("grab");
    expect(src.poseMessage([Math.SQRT1_2, Math.SQRT1_2, 0, 0]).type).toBe("pose");
  });

  it("rejects non-unit quaternions", () => {
    const src = new CommandSource();
    expect(() => src.grabMessage([1, 0.2, 0, 0])).toThrow();
    expect(() => src.poseMessage([0.5, 0, 0, 0])).toThrow();
  });

  it("builds start and reference messages", () => {
    const src = new CommandSource();
    expect(src.pressStart().type).toBe("press_start");
    const ref = src.setReference([0, 3, 4]);
    expect(norm(ref.d_r)).toBeCloseTo(1, 12);
  });
});
