/** Color scale for accessibility scores.
 *
 * Scores in (0, 1] map onto nine anchor colors of the viridis palette,
 * linearly interpolated in sRGB; viridis is sequential and close to
 * perceptually uniform, so equal score deltas read as similar color deltas.
 * An exact zero is pinned to a flat neutral grey instead of the darkest
 * ramp color, so "nothing reachable" is visually a gap rather than a very
 * bad value. Required-gated zeros additionally get a hatch overlay (see
 * map.ts). Documented in the frontend README.
 */

const ANCHORS: Array<[number, number, number]> = [
  [0x44, 0x01, 0x54],
  [0x48, 0x28, 0x78],
  [0x3b, 0x52, 0x8b],
  [0x31, 0x68, 0x8e],
  [0x21, 0x91, 0x8c],
  [0x35, 0xb7, 0x79],
  [0x5e, 0xc9, 0x62],
  [0xad, 0xdc, 0x30],
  [0xfd, 0xe7, 0x25],
];

export const NEUTRAL_ZERO = "#d4d4d0";
export const HATCH_COLOR = "#8a8a86";

const hex2 = (v: number): string => v.toString(16).padStart(2, "0");

function rgbToHex(r: number, g: number, b: number): string {
  return `#${hex2(Math.round(r))}${hex2(Math.round(g))}${hex2(Math.round(b))}`;
}

export function scoreColor(value: number): string {
  if (value === 0) return NEUTRAL_ZERO;
  const v = Math.min(1, Math.max(0, value));
  const span = ANCHORS.length - 1;
  const pos = v * span;
  const lo = Math.min(span - 1, Math.floor(pos));
  const t = pos - lo;
  const [r0, g0, b0] = ANCHORS[lo];
  const [r1, g1, b1] = ANCHORS[lo + 1];
  return rgbToHex(r0 + (r1 - r0) * t, g0 + (g1 - g0) * t, b0 + (b1 - b0) * t);
}

/** CSS gradient for the legend bar, matching scoreColor over (0, 1]. */
export function rampGradientCss(): string {
  const stops = ANCHORS.map(
    ([r, g, b], i) => `${rgbToHex(r, g, b)} ${((i / (ANCHORS.length - 1)) * 100).toFixed(1)}%`,
  );
  return `linear-gradient(to right, ${stops.join(", ")})`;
}
