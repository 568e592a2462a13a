/** Layout determinism: same graph, same seed, same pixels. */

import { describe, expect, it } from "vitest";
import { layoutGraph, mulberry32 } from "../src/layout.js";
import type { GraphEdge, GraphNode } from "../src/model.js";
import { projectEdges, projectNodes } from "../src/model.js";
import { fixturePayload } from "./fixture.js";

const OPTIONS = { width: 800, height: 520 };

function entity(key: string): GraphNode {
  return {
    key,
    label: key,
    description: "",
    kind: "entity",
    iri: key,
    blank: null,
    literal: null,
  };
}

function link(sourceKey: string, targetKey: string): GraphEdge {
  return {
    key: `${sourceKey}->${targetKey}`,
    sourceKey,
    targetKey,
    label: "p",
    description: "",
    propertyIri: "urn:p",
    triple: {
      subject: { label: sourceKey, description: "", iri: sourceKey },
      predicate: { label: "p", description: "", iri: "urn:p" },
      object: { label: targetKey, description: "", iri: targetKey },
      provenance: null,
    },
  };
}

describe("mulberry32", () => {
  it("is reproducible and uniform in [0, 1)", () => {
    const a = mulberry32(7);
    const b = mulberry32(7);
    for (let i = 0; i < 100; i++) {
      const value = a();
      expect(value).toBe(b());
      expect(value).toBeGreaterThanOrEqual(0);
      expect(value).toBeLessThan(1);
    }
    expect(mulberry32(7)()).not.toBe(mulberry32(8)());
  });
});

describe("layoutGraph", () => {
  it("returns identical positions for repeated runs", () => {
    const payload = fixturePayload();
    const nodes = projectNodes(payload);
    const edges = projectEdges(payload);
    const first = layoutGraph(nodes, edges, OPTIONS);
    const second = layoutGraph(nodes, edges, OPTIONS);
    expect([...first.entries()]).toEqual([...second.entries()]);
  });

  it("does not depend on payload ordering", () => {
    const payload = fixturePayload();
    const nodes = projectNodes(payload);
    const edges = projectEdges(payload);
    const forward = layoutGraph(nodes, edges, OPTIONS);
    const backward = layoutGraph(
      [...nodes].reverse(),
      [...edges].reverse(),
      OPTIONS,
    );
    for (const [key, point] of forward) {
      expect(backward.get(key)).toEqual(point);
    }
  });

  it("changes with the seed", () => {
    const nodes = [entity("a"), entity("b"), entity("c")];
    const one = layoutGraph(nodes, [], { ...OPTIONS, seed: 1 });
    const two = layoutGraph(nodes, [], { ...OPTIONS, seed: 2 });
    const moved = [...one.keys()].some((key) => {
      const p = one.get(key);
      const q = two.get(key);
      return p?.x !== q?.x || p?.y !== q?.y;
    });
    expect(moved).toBe(true);
  });

  it("keeps every node inside the margins", () => {
    const nodes = Array.from({ length: 30 }, (_, i) => entity(`n${i}`));
    const edges = Array.from({ length: 29 }, (_, i) =>
      link(`n${i}`, `n${i + 1}`),
    );
    const positions = layoutGraph(nodes, edges, OPTIONS);
    expect(positions.size).toBe(30);
    for (const point of positions.values()) {
      expect(point.x).toBeGreaterThanOrEqual(40);
      expect(point.x).toBeLessThanOrEqual(OPTIONS.width - 40);
      expect(point.y).toBeGreaterThanOrEqual(40);
      expect(point.y).toBeLessThanOrEqual(OPTIONS.height - 40);
    }
  });

  it("gives distinct nodes distinct positions", () => {
    const payload = fixturePayload();
    const positions = layoutGraph(
      projectNodes(payload),
      projectEdges(payload),
      OPTIONS,
    );
    const seen = new Set([...positions.values()].map((p) => `${p.x},${p.y}`));
    expect(seen.size).toBe(positions.size);
  });

  it("centers a single node and handles the empty graph", () => {
    expect(layoutGraph([], [], OPTIONS).size).toBe(0);
    const positions = layoutGraph([entity("solo")], [], OPTIONS);
    expect(positions.get("solo")).toEqual({ x: 400, y: 260 });
  });

  it("ignores self loops instead of collapsing them", () => {
    const nodes = [entity("a"), entity("b")];
    const edges = [link("a", "a"), link("a", "b")];
    const positions = layoutGraph(nodes, edges, OPTIONS);
    expect(positions.size).toBe(2);
  });
});
