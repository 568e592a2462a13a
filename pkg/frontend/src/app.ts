/** Application shell: wires the store, the API client and the three views.
 *
 * Every state change flows one way: user action, API call, fresh payload
 * into the store, re-render. The client never edits graph data locally.
 */

import { ApiClient, ApiError } from "./api.js";
import { isLiteralObject } from "./types.js";
import type { CandidatePayload, EditRequest } from "./types.js";
import type { Annotation, GraphEdge, GraphNode } from "./model.js";
import { annotationsOf, refWireId } from "./model.js";
import { Store, type AppState } from "./store.js";
import { EditorView } from "./views/editor.js";
import { GraphView } from "./views/graph.js";
import { OverlayView } from "./views/overlay.js";

export interface Download {
  filename: string;
  bytes: string;
}

export class App {
  readonly store: Store;
  readonly api: ApiClient;
  readonly editor: EditorView;
  readonly graph: GraphView;
  readonly overlay: OverlayView;
  /** Last file handed to the browser, kept for inspection. */
  lastDownload: Download | null = null;

  private readonly textInput: HTMLTextAreaElement;
  private readonly bannerEl: HTMLElement;
  private readonly warningEl: HTMLElement;
  private readonly relateButton: HTMLButtonElement;

  constructor(root: HTMLElement, api: ApiClient) {
    this.api = api;
    this.store = new Store();
    root.innerHTML = SHELL_HTML;

    this.textInput = mustFind<HTMLTextAreaElement>(root, "#text-input");
    this.bannerEl = mustFind(root, "#banner");
    this.warningEl = mustFind(root, "#span-warning");
    this.relateButton = mustFind<HTMLButtonElement>(
      root, "#add-relation-button");

    this.editor = new EditorView(
      mustFind(root, "#annotated-text"), this.store, {
        onAnnotationClick: (annotation) => this.openMention(annotation),
        onSpanProposed: (start, end) => this.proposeEntitySpan(start, end),
      });
    this.graph = new GraphView(
      mustFind<SVGSVGElement>(root, "#graph-svg"),
      mustFind(root, "#tooltip"),
      this.store, {
        onNodeActivate: (node) => this.openNode(node),
        onEdgeActivate: (edge) => this.openEdge(edge),
        onNodeToggle: (node) => this.store.toggleNodeSelection(node.key),
        onNodeConnect: (source, target) =>
          this.openRelationBetween(source.key, target.key),
      });
    this.overlay = new OverlayView(
      mustFind(root, "#overlay-root"), this.store, {
        relinkMention: (span, iri, label, description) =>
          this.relinkMention(span, iri, label, description),
        deleteEntity: (target) => this.deleteEntity(target),
        deleteRelation: (edge) => this.deleteRelation(edge),
        replaceProperty: (edge, candidate) =>
          this.replaceProperty(edge, candidate),
        addEntity: (span, iri, label, description) =>
          this.addEntity(span, iri, label, description),
        addRelation: (subjectSpan, objectSpan, candidate) =>
          this.addRelation(subjectSpan, objectSpan, candidate),
        searchEntities: async (query) =>
          (await this.api.searchEntities(query)).candidates,
        searchProperties: async (query) =>
          (await this.api.searchProperties(query)).candidates,
        reloadSession: () => this.reloadSession(),
      });

    mustFind<HTMLButtonElement>(root, "#construct-button")
      .addEventListener("click", () => {
        void this.construct(this.textInput.value);
      });
    mustFind<HTMLButtonElement>(root, "#download-button")
      .addEventListener("click", () => {
        void this.download();
      });
    this.relateButton.addEventListener("click", () => {
      this.openRelationForSelection();
    });
    mustFind<HTMLButtonElement>(root, "#zoom-in")
      .addEventListener("click", () => this.graph.zoomIn());
    mustFind<HTMLButtonElement>(root, "#zoom-out")
      .addEventListener("click", () => this.graph.zoomOut());

    this.store.subscribe((state) => this.renderChrome(state));
    this.store.subscribe((state) => this.editor.render(state));
    this.store.subscribe((state) => this.graph.render(state));
    this.store.subscribe((state) => this.overlay.render(state));
  }

  private renderChrome(state: AppState): void {
    if (state.banner === null) {
      this.bannerEl.hidden = true;
      this.bannerEl.textContent = "";
    } else {
      this.bannerEl.hidden = false;
      this.bannerEl.textContent = "";
      this.bannerEl.className = `banner ${state.banner.kind}`;
      const message = document.createElement("span");
      message.textContent = state.banner.message;
      this.bannerEl.appendChild(message);
      if (state.banner.action === "reload") {
        const reload = document.createElement("button");
        reload.className = "reload-button";
        reload.textContent = "Reload session";
        reload.addEventListener("click", () => {
          void this.reloadSession();
        });
        this.bannerEl.appendChild(reload);
      }
    }
    const entitySelection = state.selectedNodeKeys.filter((key) =>
      this.store.nodes().some((n) => n.key === key && n.kind === "entity"));
    this.relateButton.disabled = !(
      state.selectedNodeKeys.length === 2 && entitySelection.length >= 1
    );
  }

  /** Run the pipeline; on failure keep the editor content and show a banner. */
  async construct(text: string): Promise<void> {
    if (text.trim() === "") {
      this.store.setBanner({
        kind: "error",
        message: "Enter some text to construct a graph from.",
      });
      return;
    }
    this.store.setBusy(true);
    try {
      const session = await this.api.construct(text);
      this.store.setSession(session);
      this.store.setBanner(null);
    } catch (error) {
      this.store.setBanner({
        kind: "error",
        message: describeError("Construction failed", error),
      });
    } finally {
      this.store.setBusy(false);
    }
  }

  private openMention(annotation: Annotation): void {
    this.store.openOverlay({ kind: "mention", span: annotation.span });
  }

  private openNode(node: GraphNode): void {
    const session = this.store.getState().session;
    if (session !== null) {
      const annotations = annotationsOf(session, node.key);
      const first = annotations[0];
      if (first && node.kind === "entity") {
        this.store.openOverlay({ kind: "mention", span: first.span });
        return;
      }
    }
    this.store.openOverlay({ kind: "node", nodeKey: node.key });
  }

  private openEdge(edge: GraphEdge): void {
    this.store.openOverlay({ kind: "edge", edgeKey: edge.key });
  }

  /** Selection in the editor proposes a new entity span. */
  proposeEntitySpan(start: number, end: number): void {
    const session = this.store.getState().session;
    if (session === null) return;
    const crossing = session.mentions.some(
      (m) => m.start < end && start < m.end);
    if (crossing) {
      this.showSpanWarning(
        "Selection crosses an existing annotation; pick a free span.");
      return;
    }
    this.hideSpanWarning();
    this.store.openOverlay({ kind: "add-entity", span: [start, end] });
  }

  private showSpanWarning(message: string): void {
    this.warningEl.textContent = message;
    this.warningEl.hidden = false;
  }

  private hideSpanWarning(): void {
    this.warningEl.hidden = true;
    this.warningEl.textContent = "";
  }

  private openRelationForSelection(): void {
    const keys = this.store.getState().selectedNodeKeys;
    if (keys.length !== 2) return;
    const [firstKey, secondKey] = keys as [string, string];
    this.openRelationBetween(firstKey, secondKey);
  }

  /** Start the add-relation flow between two nodes. Literals can only be
   * objects, so when exactly one of the pair is an entity it becomes the
   * subject regardless of pick order. */
  private openRelationBetween(firstKey: string, secondKey: string): void {
    const session = this.store.getState().session;
    if (session === null) return;
    const kind = (key: string): "entity" | "literal" | null =>
      this.store.nodes().find((n) => n.key === key)?.kind ?? null;
    let subjectKey = firstKey;
    let objectKey = secondKey;
    if (kind(subjectKey) === "literal" && kind(objectKey) === "entity") {
      [subjectKey, objectKey] = [objectKey, subjectKey];
    }
    if (kind(subjectKey) !== "entity") {
      this.store.setBanner({
        kind: "error",
        message: "A relation needs an entity as its subject.",
      });
      return;
    }
    const subjectSpan = this.spanForNode(subjectKey);
    const objectSpan = this.spanForNode(objectKey);
    if (subjectSpan === null || objectSpan === null) {
      this.store.setBanner({
        kind: "error",
        message: "Both nodes need a text mention to author a relation.",
      });
      return;
    }
    this.store.openOverlay({
      kind: "add-relation",
      subjectSpan,
      objectSpan,
    });
  }

  private spanForNode(nodeKey: string): [number, number] | null {
    const session = this.store.getState().session;
    if (session === null) return null;
    const annotations = annotationsOf(session, nodeKey);
    const first = annotations[0];
    return first ? first.span : null;
  }

  private async applyEdit(edit: EditRequest): Promise<void> {
    const session = this.store.getState().session;
    if (session === null) return;
    this.store.setBusy(true);
    try {
      const updated = await this.api.applyEdit(session.sessionId, edit);
      this.store.setSession(updated);
      this.store.setBanner(null);
      this.hideSpanWarning();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.store.setBanner({
          kind: "error",
          message: `Stale revision (server is at ${error.revision ?? "?"}); ` +
            "reload the session to continue.",
          action: "reload",
        });
      } else {
        this.store.setBanner({
          kind: "error",
          message: describeError("Edit failed", error),
        });
      }
    } finally {
      this.store.setBusy(false);
    }
  }

  private revision(): number {
    return this.store.getState().session?.revision ?? 0;
  }

  relinkMention(
    span: [number, number],
    iri: string | null,
    label?: string,
    description?: string,
  ): Promise<void> {
    return this.applyEdit({
      action: "relink-mention",
      revision: this.revision(),
      span,
      iri,
      ...(iri !== null && label !== undefined ? { label } : {}),
      ...(iri !== null && description !== undefined ? { description } : {}),
    });
  }

  deleteEntity(
    target: { iri: string } | { span: [number, number] },
  ): Promise<void> {
    if ("iri" in target) {
      return this.applyEdit({
        action: "delete-entity",
        revision: this.revision(),
        iri: target.iri,
      });
    }
    return this.applyEdit({
      action: "delete-entity",
      revision: this.revision(),
      span: target.span,
    });
  }

  deleteRelation(edge: GraphEdge): Promise<void> {
    const triple = edge.triple;
    const term = triple.object;
    const object = isLiteralObject(term)
      ? { literal: term.literal }
      : refWireId(term);
    return this.applyEdit({
      action: "delete-relation",
      revision: this.revision(),
      subject: refWireId(triple.subject),
      predicate: triple.predicate.iri ?? "",
      object,
    });
  }

  /** Swap an edge's property: remove the old triple, add the new one. */
  async replaceProperty(
    edge: GraphEdge,
    candidate: CandidatePayload,
  ): Promise<void> {
    const provenance = edge.triple.provenance;
    if (provenance === null) return;
    await this.deleteRelation(edge);
    if (this.store.getState().banner !== null) return;
    await this.addRelation(
      provenance.subject, provenance.object, candidate);
  }

  addEntity(
    span: [number, number],
    iri: string | null,
    label?: string,
    description?: string,
  ): Promise<void> {
    return this.applyEdit({
      action: "add-entity",
      revision: this.revision(),
      span,
      iri,
      ...(iri !== null && label !== undefined ? { label } : {}),
      ...(iri !== null && description !== undefined ? { description } : {}),
    });
  }

  addRelation(
    subjectSpan: [number, number],
    objectSpan: [number, number],
    candidate: CandidatePayload,
  ): Promise<void> {
    return this.applyEdit({
      action: "add-relation",
      revision: this.revision(),
      subject_span: subjectSpan,
      object_span: objectSpan,
      property: candidate.iri,
      label: candidate.label,
      description: candidate.description,
    });
  }

  async reloadSession(): Promise<void> {
    const session = this.store.getState().session;
    if (session === null) return;
    try {
      const fresh = await this.api.getGraph(session.sessionId);
      this.store.setSession(fresh);
      this.store.setBanner(null);
    } catch (error) {
      this.store.setBanner({
        kind: "error",
        message: describeError("Reload failed", error),
      });
    }
  }

  /** Fetch the graph file from the API and hand it to the browser. */
  async download(): Promise<void> {
    const session = this.store.getState().session;
    if (session === null) {
      this.store.setBanner({
        kind: "error",
        message: "Construct a graph before downloading.",
      });
      return;
    }
    try {
      const bytes = await this.api.downloadNtriples(session.sessionId);
      const filename = `graph-${session.sessionId.slice(0, 8)}.nt`;
      this.lastDownload = { filename, bytes };
      saveFile(filename, bytes);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.store.setBanner({
          kind: "error",
          message: "Session no longer exists; construct the graph again.",
        });
      } else {
        this.store.setBanner({
          kind: "error",
          message: describeError("Download failed", error),
        });
      }
    }
  }
}

function describeError(prefix: string, error: unknown): string {
  if (error instanceof ApiError) {
    const stage = error.stage !== null ? ` (stage: ${error.stage})` : "";
    return `${prefix}: ${error.message}${stage}`;
  }
  return `${prefix}: ${String(error)}`;
}

function saveFile(filename: string, bytes: string): void {
  if (typeof URL.createObjectURL !== "function") return;
  const blob = new Blob([bytes], { type: "application/n-triples" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

function mustFind<T extends Element = HTMLElement>(
  root: HTMLElement,
  selector: string,
): T {
  const el = root.querySelector<T>(selector);
  if (el === null) throw new Error(`missing element: ${selector}`);
  return el;
}

const SHELL_HTML = `
<header class="app-header">
  <h1>kgforge</h1>
  <button id="download-button">Download N-Triples</button>
</header>
<div id="banner" class="banner" hidden></div>
<main class="panes">
  <section class="editor-pane">
    <textarea id="text-input" rows="5"
      placeholder="Paste text, then construct a graph."></textarea>
    <button id="construct-button">Construct graph</button>
    <div id="span-warning" class="inline-warning" hidden></div>
    <div id="annotated-text" class="annotated-text"></div>
  </section>
  <section class="graph-pane">
    <div class="graph-controls">
      <button id="add-relation-button" disabled>Link selected nodes</button>
      <button id="zoom-in" title="Zoom in">+</button>
      <button id="zoom-out" title="Zoom out">&minus;</button>
    </div>
    <svg id="graph-svg" role="img"></svg>
    <div id="tooltip" class="tooltip" hidden></div>
  </section>
</main>
<div id="overlay-root"></div>
`;

export function createApp(root: HTMLElement, api?: ApiClient): App {
  return new App(root, api ?? new ApiClient());
}
