/** Graph pane: SVG rendering of the current triples with a deterministic
 * force-directed layout. Zoom, pan and node dragging touch only the
 * viewport and per-node positions, never the graph data; dragging one node
 * onto another starts the add-relation flow instead.
 */

import type { GraphEdge, GraphNode } from "../model.js";
import type { AppState, Store } from "../store.js";
import { layoutGraph, type Point } from "../layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 800;
const HEIGHT = 520;
/** Above this many nodes, only the highest-degree nodes keep labels. */
const LABEL_CAP = 60;
/** Extra border around the viewport inside which elements stay rendered. */
const CULL_MARGIN = 60;

export interface GraphDelegate {
  onNodeActivate(node: GraphNode): void;
  onEdgeActivate(edge: GraphEdge): void;
  onNodeToggle(node: GraphNode): void;
  onNodeConnect(source: GraphNode, target: GraphNode): void;
}

interface NodeSprite {
  node: GraphNode;
  group: SVGGElement;
  circle: SVGCircleElement;
  label: SVGTextElement | null;
}

interface EdgeSprite {
  edge: GraphEdge;
  group: SVGGElement;
  line: SVGLineElement;
  label: SVGTextElement;
}

interface DragState {
  key: string;
  origin: Point;
  moved: boolean;
}

export class GraphView {
  private readonly svg: SVGSVGElement;
  private readonly tooltip: HTMLElement;
  private readonly store: Store;
  private readonly delegate: GraphDelegate;
  private zoom = 1;
  private panX = 0;
  private panY = 0;
  private lastSession: unknown = null;
  private positions = new Map<string, Point>();
  private nodeSprites = new Map<string, NodeSprite>();
  private edgeSprites = new Map<string, EdgeSprite>();
  private drag: DragState | null = null;

  constructor(
    svg: SVGSVGElement,
    tooltip: HTMLElement,
    store: Store,
    delegate: GraphDelegate,
  ) {
    this.svg = svg;
    this.tooltip = tooltip;
    this.store = store;
    this.delegate = delegate;
    this.svg.addEventListener("mousemove", (event) => {
      this.handleDragMove(event as MouseEvent);
    });
    this.svg.addEventListener("mouseup", () => {
      this.drag = null;
    });
    this.svg.addEventListener("mouseleave", () => {
      this.drag = null;
    });
    this.applyViewport();
  }

  zoomIn(): void {
    this.zoom = Math.min(this.zoom * 1.25, 8);
    this.applyViewport();
  }

  zoomOut(): void {
    this.zoom = Math.max(this.zoom / 1.25, 0.25);
    this.applyViewport();
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
    this.applyViewport();
  }

  private viewBox(): { x: number; y: number; w: number; h: number } {
    const w = WIDTH / this.zoom;
    const h = HEIGHT / this.zoom;
    return {
      x: this.panX + (WIDTH - w) / 2,
      y: this.panY + (HEIGHT - h) / 2,
      w,
      h,
    };
  }

  private applyViewport(): void {
    const box = this.viewBox();
    this.svg.setAttribute(
      "viewBox",
      `${box.x} ${box.y} ${box.w} ${box.h}`,
    );
    this.cull();
  }

  /** Hide sprites far outside the viewport; large graphs stay responsive. */
  private cull(): void {
    const box = this.viewBox();
    const minX = box.x - CULL_MARGIN;
    const maxX = box.x + box.w + CULL_MARGIN;
    const minY = box.y - CULL_MARGIN;
    const maxY = box.y + box.h + CULL_MARGIN;
    const onScreen = (p: Point | undefined): boolean =>
      p !== undefined &&
      p.x >= minX && p.x <= maxX && p.y >= minY && p.y <= maxY;
    for (const sprite of this.nodeSprites.values()) {
      const visible = onScreen(this.positions.get(sprite.node.key));
      sprite.group.style.display = visible ? "" : "none";
    }
    for (const sprite of this.edgeSprites.values()) {
      const source = this.positions.get(sprite.edge.sourceKey);
      const target = this.positions.get(sprite.edge.targetKey);
      const visible = onScreen(source) || onScreen(target);
      sprite.group.style.display = visible ? "" : "none";
    }
  }

  /** Map a mouse event to graph coordinates through the current viewBox. */
  private toGraphPoint(event: MouseEvent): Point {
    const rect = this.svg.getBoundingClientRect();
    const box = this.viewBox();
    if (rect.width > 0 && rect.height > 0) {
      return {
        x: box.x + ((event.clientX - rect.left) / rect.width) * box.w,
        y: box.y + ((event.clientY - rect.top) / rect.height) * box.h,
      };
    }
    // Unlaid-out documents report zero-size rects; read coordinates as-is.
    return { x: event.clientX, y: event.clientY };
  }

  render(state: AppState): void {
    if (state.session !== this.lastSession) {
      this.lastSession = state.session;
      this.rebuild();
    }
    this.applyState(state);
  }

  private rebuild(): void {
    const nodes = this.store.nodes();
    const edges = this.store.edges();
    this.positions = layoutGraph(nodes, edges, {
      width: WIDTH,
      height: HEIGHT,
    });
    this.drag = null;
    this.nodeSprites.clear();
    this.edgeSprites.clear();
    this.svg.textContent = "";
    this.svg.setAttribute("width", String(WIDTH));
    this.svg.setAttribute("height", String(HEIGHT));

    const edgeLayer = document.createElementNS(SVG_NS, "g");
    edgeLayer.setAttribute("class", "edges");
    this.svg.appendChild(edgeLayer);
    for (const edge of edges) this.buildEdge(edgeLayer, edge);

    const nodeLayer = document.createElementNS(SVG_NS, "g");
    nodeLayer.setAttribute("class", "nodes");
    this.svg.appendChild(nodeLayer);
    const labeled = labeledKeys(nodes, edges);
    for (const node of nodes) {
      this.buildNode(nodeLayer, node, labeled.has(node.key));
    }
    this.cull();
  }

  private buildEdge(layer: SVGElement, edge: GraphEdge): void {
    const source = this.positions.get(edge.sourceKey);
    const target = this.positions.get(edge.targetKey);
    if (!source || !target) return;
    const group = document.createElementNS(SVG_NS, "g") as SVGGElement;
    group.setAttribute("class", "edge");
    (group as unknown as HTMLElement).dataset.edgeKey = edge.key;

    const line = document.createElementNS(SVG_NS, "line") as SVGLineElement;
    line.setAttribute("x1", String(source.x));
    line.setAttribute("y1", String(source.y));
    line.setAttribute("x2", String(target.x));
    line.setAttribute("y2", String(target.y));
    group.appendChild(line);

    const label = document.createElementNS(SVG_NS, "text") as SVGTextElement;
    label.setAttribute("x", String((source.x + target.x) / 2));
    label.setAttribute("y", String((source.y + target.y) / 2 - 6));
    label.setAttribute("class", "edge-label");
    label.textContent = edge.label;
    group.appendChild(label);

    group.addEventListener("mouseenter", () => {
      this.showTooltip(edge.label, edge.description, edge.propertyIri);
    });
    group.addEventListener("mouseleave", () => this.hideTooltip());
    group.addEventListener("click", (event) => {
      event.stopPropagation();
      this.delegate.onEdgeActivate(edge);
    });
    layer.appendChild(group);
    this.edgeSprites.set(edge.key, { edge, group, line, label });
  }

  private buildNode(
    layer: SVGElement,
    node: GraphNode,
    drawLabel: boolean,
  ): void {
    const position = this.positions.get(node.key);
    if (!position) return;
    const group = document.createElementNS(SVG_NS, "g") as SVGGElement;
    group.setAttribute(
      "class",
      node.kind === "literal" ? "node literal" : "node entity",
    );
    (group as unknown as HTMLElement).dataset.nodeKey = node.key;

    const circle = document.createElementNS(
      SVG_NS, "circle") as SVGCircleElement;
    circle.setAttribute("cx", String(position.x));
    circle.setAttribute("cy", String(position.y));
    circle.setAttribute("r", "16");
    group.appendChild(circle);

    let label: SVGTextElement | null = null;
    if (drawLabel) {
      label = document.createElementNS(SVG_NS, "text") as SVGTextElement;
      label.setAttribute("x", String(position.x));
      label.setAttribute("y", String(position.y + 30));
      label.setAttribute("class", "node-label");
      label.textContent = node.label;
      group.appendChild(label);
    }

    group.addEventListener("mouseenter", () => {
      this.store.setHover(node.key);
      this.showTooltip(node.label, node.description, node.iri);
    });
    group.addEventListener("mouseleave", () => {
      this.store.setHover(null);
      this.hideTooltip();
    });
    group.addEventListener("mousedown", (event) => {
      event.preventDefault();
      this.drag = {
        key: node.key,
        origin: { ...(this.positions.get(node.key) as Point) },
        moved: false,
      };
    });
    group.addEventListener("mouseup", (event) => {
      const drag = this.drag;
      if (drag !== null && drag.key !== node.key) {
        event.stopPropagation();
        this.drag = null;
        // A drag that ends on another node proposes a relation; the dragged
        // node snaps back so nothing looks moved.
        this.moveNode(drag.key, drag.origin);
        const source = this.nodeSprites.get(drag.key)?.node;
        if (source !== undefined) {
          this.delegate.onNodeConnect(source, node);
        }
      }
    });
    group.addEventListener("click", (event) => {
      event.stopPropagation();
      this.delegate.onNodeToggle(node);
    });
    group.addEventListener("dblclick", (event) => {
      event.stopPropagation();
      this.delegate.onNodeActivate(node);
    });
    layer.appendChild(group);
    this.nodeSprites.set(node.key, { node, group, circle, label });
  }

  private handleDragMove(event: MouseEvent): void {
    const drag = this.drag;
    if (drag === null) return;
    drag.moved = true;
    this.moveNode(drag.key, this.toGraphPoint(event));
  }

  /** Reposition one node sprite and its incident edges. View-only state. */
  private moveNode(key: string, point: Point): void {
    const sprite = this.nodeSprites.get(key);
    if (sprite === undefined) return;
    this.positions.set(key, { x: point.x, y: point.y });
    sprite.circle.setAttribute("cx", String(point.x));
    sprite.circle.setAttribute("cy", String(point.y));
    if (sprite.label !== null) {
      sprite.label.setAttribute("x", String(point.x));
      sprite.label.setAttribute("y", String(point.y + 30));
    }
    for (const edgeSprite of this.edgeSprites.values()) {
      const { edge, line, label } = edgeSprite;
      if (edge.sourceKey !== key && edge.targetKey !== key) continue;
      const source = this.positions.get(edge.sourceKey);
      const target = this.positions.get(edge.targetKey);
      if (!source || !target) continue;
      line.setAttribute("x1", String(source.x));
      line.setAttribute("y1", String(source.y));
      line.setAttribute("x2", String(target.x));
      line.setAttribute("y2", String(target.y));
      label.setAttribute("x", String((source.x + target.x) / 2));
      label.setAttribute("y", String((source.y + target.y) / 2 - 6));
    }
    this.cull();
  }

  private showTooltip(
    label: string,
    description: string,
    iri: string | null,
  ): void {
    this.tooltip.textContent = "";
    const title = document.createElement("strong");
    title.textContent = label;
    this.tooltip.appendChild(title);
    if (description) {
      const desc = document.createElement("div");
      desc.textContent = description;
      this.tooltip.appendChild(desc);
    }
    if (iri) {
      const link = document.createElement("a");
      link.href = iri;
      link.textContent = iri;
      link.target = "_blank";
      link.rel = "noreferrer";
      this.tooltip.appendChild(link);
    }
    this.tooltip.hidden = false;
  }

  private hideTooltip(): void {
    this.tooltip.hidden = true;
  }

  private applyState(state: AppState): void {
    const groups = this.svg.querySelectorAll<SVGGElement>(".node");
    for (const group of groups) {
      const key = (group as unknown as HTMLElement).dataset.nodeKey ?? "";
      group.classList.toggle(
        "active",
        state.hoverKey !== null && key === state.hoverKey,
      );
      group.classList.toggle(
        "selected",
        state.selectedNodeKeys.includes(key),
      );
    }
  }
}

/** Keys that keep a text label: everything under the cap, otherwise the
 * highest-degree nodes. */
function labeledKeys(nodes: GraphNode[], edges: GraphEdge[]): Set<string> {
  if (nodes.length <= LABEL_CAP) {
    return new Set(nodes.map((n) => n.key));
  }
  const degree = new Map<string, number>();
  for (const node of nodes) degree.set(node.key, 0);
  for (const edge of edges) {
    degree.set(edge.sourceKey, (degree.get(edge.sourceKey) ?? 0) + 1);
    degree.set(edge.targetKey, (degree.get(edge.targetKey) ?? 0) + 1);
  }
  const ranked = [...degree.entries()].sort(
    (a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1),
  );
  return new Set(ranked.slice(0, LABEL_CAP).map(([key]) => key));
}
