/**
 * Frame-sampling schedule, kept in lockstep with the toolkit's
 * `frame_schedule`: count = round(duration / spacing) clamped to
 * [1, maxFrames], timestamps centered in equal segments.  Rounding is
 * half-to-even to match the Python side exactly.
 */

export function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff < 0.5) return floor;
  if (diff > 0.5) return floor + 1;
  return floor % 2 === 0 ? floor : floor + 1;
}

export function frameSchedule(
  duration: number,
  targetSpacing = 3.6,
  targetFrames = 5,
): number[] {
  if (!Number.isFinite(duration) || duration <= 0) {
    throw new Error(`duration must be finite and > 0, got ${duration}`);
  }
  if (!Number.isFinite(targetSpacing) || targetSpacing <= 0) {
    throw new Error(`target spacing must be > 0, got ${targetSpacing}`);
  }
  if (targetFrames < 1) {
    throw new Error(`target frames must be >= 1, got ${targetFrames}`);
  }
  const n = Math.min(Math.max(roundHalfEven(duration / targetSpacing), 1), targetFrames);
  const times: number[] = [];
  for (let i = 0; i < n; i++) {
    times.push(((i + 0.5) * duration) / n);
  }
  return times;
}
