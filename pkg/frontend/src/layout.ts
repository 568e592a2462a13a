/** Deterministic force-directed layout.
 *
 * Positions depend only on the node/edge keys and the seed, so repeated
 * renders of the same graph are pixel-stable.
 */

import type { GraphEdge, GraphNode } from "./model.js";

export interface Point {
  x: number;
  y: number;
}

/** Small fast PRNG (mulberry32) so layouts are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function hashKey(key: string): number {
  let h = 2166136261;
  for (let i = 0; i < key.length; i++) {
    h ^= key.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return h >>> 0;
}

export interface LayoutOptions {
  width: number;
  height: number;
  seed?: number;
  iterations?: number;
}

export function layoutGraph(
  nodes: GraphNode[],
  edges: GraphEdge[],
  options: LayoutOptions,
): Map<string, Point> {
  const { width, height } = options;
  const seed = options.seed ?? 42;
  const iterations = options.iterations ?? 120;
  const positions = new Map<string, Point>();
  if (nodes.length === 0) return positions;

  const margin = 40;
  const keys = [...nodes.map((n) => n.key)].sort();
  // Seed initial positions from the node key so the layout does not depend
  // on payload ordering.
  for (const key of keys) {
    const rand = mulberry32(seed ^ hashKey(key));
    positions.set(key, {
      x: margin + rand() * (width - 2 * margin),
      y: margin + rand() * (height - 2 * margin),
    });
  }
  if (nodes.length === 1) {
    positions.set(keys[0] as string, { x: width / 2, y: height / 2 });
    return positions;
  }

  const springLength = Math.min(width, height) / 2.5;
  const repulsion = springLength * springLength;
  let temperature = Math.min(width, height) / 8;
  const cooling = 0.92;

  const links: Array<[string, string]> = edges
    .filter((e) => e.sourceKey !== e.targetKey)
    .map((e) => [e.sourceKey, e.targetKey]);

  for (let step = 0; step < iterations; step++) {
    const forces = new Map<string, Point>();
    for (const key of keys) forces.set(key, { x: 0, y: 0 });

    for (let i = 0; i < keys.length; i++) {
      for (let j = i + 1; j < keys.length; j++) {
        const a = positions.get(keys[i] as string) as Point;
        const b = positions.get(keys[j] as string) as Point;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let dist = Math.hypot(dx, dy);
        if (dist < 0.01) {
          // Deterministic nudge for coincident points.
          dx = 0.01 * (i - j);
          dy = 0.01;
          dist = Math.hypot(dx, dy);
        }
        const push = repulsion / (dist * dist);
        const fa = forces.get(keys[i] as string) as Point;
        const fb = forces.get(keys[j] as string) as Point;
        fa.x += (dx / dist) * push;
        fa.y += (dy / dist) * push;
        fb.x -= (dx / dist) * push;
        fb.y -= (dy / dist) * push;
      }
    }

    for (const [sourceKey, targetKey] of links) {
      const a = positions.get(sourceKey);
      const b = positions.get(targetKey);
      if (!a || !b) continue;
      const dx = a.x - b.x;
      const dy = a.y - b.y;
      const dist = Math.max(Math.hypot(dx, dy), 0.01);
      const pull = (dist - springLength) / 10;
      const fa = forces.get(sourceKey) as Point;
      const fb = forces.get(targetKey) as Point;
      fa.x -= (dx / dist) * pull;
      fa.y -= (dy / dist) * pull;
      fb.x += (dx / dist) * pull;
      fb.y += (dy / dist) * pull;
    }

    for (const key of keys) {
      const p = positions.get(key) as Point;
      const f = forces.get(key) as Point;
      const mag = Math.max(Math.hypot(f.x, f.y), 0.01);
      const step_ = Math.min(mag, temperature);
      p.x += (f.x / mag) * step_;
      p.y += (f.y / mag) * step_;
      p.x = Math.min(width - margin, Math.max(margin, p.x));
      p.y = Math.min(height - margin, Math.max(margin, p.y));
    }
    temperature *= cooling;
  }

  return positions;
}
