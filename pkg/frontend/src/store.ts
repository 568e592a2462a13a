/** Single client-side store: a projection of the last server payload plus
 * transient view state (hover, selection, banner, overlay).
 *
 * Graph content only ever changes through setSession, i.e. by loading a new
 * server response; no client code mutates mentions or triples directly.
 */

import type { SessionPayload } from "./types.js";
import type { Annotation, GraphEdge, GraphNode } from "./model.js";
import {
  projectAnnotations,
  projectEdges,
  projectNodes,
} from "./model.js";

export interface OverlayTarget {
  kind: "mention" | "node" | "edge" | "add-entity" | "add-relation";
  /** Span for mention and add-entity targets. */
  span?: [number, number];
  /** Node key for node targets. */
  nodeKey?: string;
  /** Edge key for edge targets. */
  edgeKey?: string;
  /** Spans for add-relation targets. */
  subjectSpan?: [number, number];
  objectSpan?: [number, number];
}

export interface Banner {
  kind: "error" | "info";
  message: string;
  /** Optional recovery the banner offers, e.g. reload after a 409. */
  action?: "reload";
}

export interface AppState {
  session: SessionPayload | null;
  hoverKey: string | null;
  selectedNodeKeys: string[];
  overlay: OverlayTarget | null;
  banner: Banner | null;
  busy: boolean;
}

export type Listener = (state: AppState) => void;

export class Store {
  private state: AppState = {
    session: null,
    hoverKey: null,
    selectedNodeKeys: [],
    overlay: null,
    banner: null,
    busy: false,
  };
  private listeners: Listener[] = [];

  getState(): AppState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /** Load a fresh server payload; the only way graph content changes. */
  setSession(session: SessionPayload): void {
    this.patch({
      session,
      hoverKey: null,
      selectedNodeKeys: [],
      overlay: null,
    });
  }

  setHover(key: string | null): void {
    if (this.state.hoverKey !== key) this.patch({ hoverKey: key });
  }

  /** Toggle node selection, keeping at most the two most recent picks. */
  toggleNodeSelection(key: string): void {
    const current = this.state.selectedNodeKeys;
    const next = current.includes(key)
      ? current.filter((k) => k !== key)
      : [...current, key].slice(-2);
    this.patch({ selectedNodeKeys: next });
  }

  clearNodeSelection(): void {
    if (this.state.selectedNodeKeys.length > 0) {
      this.patch({ selectedNodeKeys: [] });
    }
  }

  openOverlay(target: OverlayTarget): void {
    this.patch({ overlay: target });
  }

  closeOverlay(): void {
    if (this.state.overlay !== null) this.patch({ overlay: null });
  }

  setBanner(banner: Banner | null): void {
    this.patch({ banner });
  }

  setBusy(busy: boolean): void {
    if (this.state.busy !== busy) this.patch({ busy });
  }

  // Derived views, all recomputed from the payload.

  nodes(): GraphNode[] {
    return this.state.session ? projectNodes(this.state.session) : [];
  }

  edges(): GraphEdge[] {
    return this.state.session ? projectEdges(this.state.session) : [];
  }

  annotations(): Annotation[] {
    return this.state.session ? projectAnnotations(this.state.session) : [];
  }
}
