/** Keyboard-to-command mapping and outbound message rate limiting. */

import { Command } from "./protocol.js";

export const LINEAR_SPEED = 0.6;
export const ANGULAR_SPEED = 1.5;
export const FORK_SPEED = 0.25;

// server-side clamp limits, mirrored so the UI shows what will apply
export const LINEAR_LIMIT = 1.0;
export const ANGULAR_LIMIT = 1.5;
export const FORK_LIMIT = 1.0;

function clamp(value: number, limit: number): number {
  return Math.min(limit, Math.max(-limit, value));
}

export function clampCommand(command: Command): Command {
  return {
    linear: clamp(command.linear, LINEAR_LIMIT),
    angular: clamp(command.angular, ANGULAR_LIMIT),
    fork: clamp(command.fork, FORK_LIMIT),
  };
}

/** Map held keys (lowercase `event.key` values) to a command.
 *
 * W/S drive, A/D turn (A is the positive, counter-clockwise direction),
 * R/F move the fork; arrows alias WASD. Opposite keys cancel.
 */
export function commandFromKeys(keys: ReadonlySet<string>): Command {
  const held = (...names: string[]) => names.some((n) => keys.has(n));
  let linear = 0;
  let angular = 0;
  let fork = 0;
  if (held("w", "arrowup")) linear += LINEAR_SPEED;
  if (held("s", "arrowdown")) linear -= LINEAR_SPEED;
  if (held("a", "arrowleft")) angular += ANGULAR_SPEED;
  if (held("d", "arrowright")) angular -= ANGULAR_SPEED;
  if (held("r")) fork += FORK_SPEED;
  if (held("f")) fork -= FORK_SPEED;
  return clampCommand({ linear, angular, fork });
}

/** Latest-wins throttle: at most one send per interval, final state always sent.
 *
 * Key auto-repeat can offer hundreds of messages a second; the server only
 * honours the newest command per tick anyway, so older pending messages are
 * simply replaced while waiting for the interval to elapse.
 */
export class RateLimiter {
  private pending: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastSent = Number.NEGATIVE_INFINITY;

  constructor(
    private readonly intervalMs: number,
    private readonly send: (message: string) => void,
  ) {}

  offer(message: string): void {
    const now = Date.now();
    if (this.timer === null && now - this.lastSent >= this.intervalMs) {
      this.lastSent = now;
      this.send(message);
      return;
    }
    this.pending = message;
    if (this.timer === null) {
      const wait = Math.max(0, this.intervalMs - (now - this.lastSent));
      this.timer = setTimeout(() => this.flush(), wait);
    }
  }

  private flush(): void {
    this.timer = null;
    if (this.pending !== null) {
      const message = this.pending;
      this.pending = null;
      this.lastSent = Date.now();
      this.send(message);
    }
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
  }
}
