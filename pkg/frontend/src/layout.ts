// Fixed circular layout, stable per network id: replays must look spatially
// identical to self-play, so positions depend only on the id string.

export interface Point {
  x: number;
  y: number;
}

export const N_NODES = 12;

function hashString(s: string): number {
  let h = 2166136261;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return h >>> 0;
}

export function circularLayout(
  networkId: string,
  width = 600,
  height = 600,
): Point[] {
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * 0.4;
  const offset = (hashString(networkId) % N_NODES) * ((2 * Math.PI) / N_NODES);
  const points: Point[] = [];
  for (let i = 0; i < N_NODES; i++) {
    const angle = offset + (i * 2 * Math.PI) / N_NODES - Math.PI / 2;
    points.push({
      x: cx + radius * Math.cos(angle),
      y: cy + radius * Math.sin(angle),
    });
  }
  return points;
}
