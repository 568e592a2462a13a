/** Correction overlay: inspect the current link, pick another candidate,
 * search the knowledge base, author new entities/relations, or delete.
 */

import type { CandidatePayload, MentionPayload } from "../types.js";
import type { Annotation, GraphEdge, GraphNode } from "../model.js";
import type { AppState, OverlayTarget, Store } from "../store.js";

export interface OverlayDelegate {
  relinkMention(
    span: [number, number],
    iri: string | null,
    label?: string,
    description?: string,
  ): Promise<void>;
  deleteEntity(target: { iri: string } | { span: [number, number] }):
    Promise<void>;
  deleteRelation(edge: GraphEdge): Promise<void>;
  replaceProperty(edge: GraphEdge, candidate: CandidatePayload):
    Promise<void>;
  addEntity(
    span: [number, number],
    iri: string | null,
    label?: string,
    description?: string,
  ): Promise<void>;
  addRelation(
    subjectSpan: [number, number],
    objectSpan: [number, number],
    candidate: CandidatePayload,
  ): Promise<void>;
  searchEntities(query: string): Promise<CandidatePayload[]>;
  searchProperties(query: string): Promise<CandidatePayload[]>;
  reloadSession(): Promise<void>;
}

export class OverlayView {
  private readonly root: HTMLElement;
  private readonly store: Store;
  private readonly delegate: OverlayDelegate;
  private lastTarget: OverlayTarget | null = null;
  private lastSession: unknown = null;
  private lastStale = false;

  constructor(root: HTMLElement, store: Store, delegate: OverlayDelegate) {
    this.root = root;
    this.store = store;
    this.delegate = delegate;
  }

  render(state: AppState): void {
    const stale = state.banner !== null && state.banner.action === "reload";
    if (
      state.overlay === this.lastTarget &&
      state.session === this.lastSession &&
      stale === this.lastStale
    ) {
      return;
    }
    this.lastTarget = state.overlay;
    this.lastSession = state.session;
    this.lastStale = stale;
    this.root.textContent = "";
    if (state.overlay === null || state.session === null) return;
    const panel = document.createElement("div");
    panel.className = "overlay-panel";
    this.root.appendChild(panel);
    if (stale) this.buildStaleNotice(panel);
    this.buildHeader(panel);
    const target = state.overlay;
    if (target.kind === "mention") this.buildMention(panel, target);
    else if (target.kind === "node") this.buildNode(panel, target);
    else if (target.kind === "edge") this.buildEdge(panel, target);
    else if (target.kind === "add-entity") this.buildAddEntity(panel, target);
    else if (target.kind === "add-relation") {
      this.buildAddRelation(panel, target);
    }
  }

  private buildStaleNotice(panel: HTMLElement): void {
    const notice = document.createElement("div");
    notice.className = "stale-notice";
    const message = document.createElement("span");
    message.textContent =
      "This session changed elsewhere. Reload to continue editing.";
    notice.appendChild(message);
    const reload = document.createElement("button");
    reload.className = "reload-button";
    reload.textContent = "Reload session";
    reload.addEventListener("click", () => {
      void this.delegate.reloadSession();
    });
    notice.appendChild(reload);
    panel.appendChild(notice);
  }

  private buildHeader(panel: HTMLElement): void {
    const close = document.createElement("button");
    close.className = "overlay-close";
    close.textContent = "Close";
    close.addEventListener("click", () => this.store.closeOverlay());
    panel.appendChild(close);
  }

  private mentionAt(span: [number, number]): MentionPayload | null {
    const session = this.store.getState().session;
    if (session === null) return null;
    for (const mention of session.mentions) {
      if (mention.start === span[0] && mention.end === span[1]) {
        return mention;
      }
    }
    return null;
  }

  private buildMention(panel: HTMLElement, target: OverlayTarget): void {
    const span = target.span;
    if (!span) return;
    const mention = this.mentionAt(span);
    if (mention === null) return;

    panel.appendChild(heading(`"${mention.surface}"`));
    panel.appendChild(this.currentResolution(mention));

    if (mention.kind !== "literal") {
      const list = document.createElement("ul");
      list.className = "candidate-list";
      mention.candidates.forEach((candidate, index) => {
        const item = document.createElement("li");
        const pick = candidateButton(candidate, () => {
          void this.delegate.relinkMention(
            span, candidate.iri, candidate.label, candidate.description);
        });
        if (mention.kind === "linked" && index === mention.selected) {
          pick.classList.add("current");
        }
        item.appendChild(pick);
        list.appendChild(item);
      });
      panel.appendChild(list);

      panel.appendChild(this.searchBox("Search entities", async (query) => {
        return this.delegate.searchEntities(query);
      }, (candidate) => {
        void this.delegate.relinkMention(
          span, candidate.iri, candidate.label, candidate.description);
      }));

      if (mention.kind === "linked") {
        const unlink = document.createElement("button");
        unlink.className = "unlink-button";
        unlink.textContent = "Unlink";
        unlink.addEventListener("click", () => {
          void this.delegate.relinkMention(span, null);
        });
        panel.appendChild(unlink);
      }
    }

    const remove = document.createElement("button");
    remove.className = "delete-button";
    remove.textContent = "Delete entity";
    remove.addEventListener("click", () => {
      void this.delegate.deleteEntity({ span });
    });
    panel.appendChild(remove);
  }

  private currentResolution(mention: MentionPayload): HTMLElement {
    const info = document.createElement("div");
    info.className = "current-resolution";
    if (mention.kind === "linked") {
      const selected = mention.candidates[mention.selected];
      if (selected) {
        info.appendChild(textDiv("resolution-label", selected.label));
        info.appendChild(
          textDiv("resolution-description", selected.description));
        const link = document.createElement("a");
        link.href = selected.iri;
        link.textContent = selected.iri;
        link.target = "_blank";
        link.rel = "noreferrer";
        info.appendChild(link);
      }
    } else if (mention.kind === "literal" && mention.literal) {
      info.appendChild(textDiv(
        "resolution-label",
        `${mention.literal.kind} literal: ${mention.literal.lexical}`));
      info.appendChild(
        textDiv("resolution-description", mention.literal.datatype));
    } else {
      info.appendChild(textDiv("resolution-label", "unlinked entity"));
    }
    return info;
  }

  private buildNode(panel: HTMLElement, target: OverlayTarget): void {
    const node = this.store.nodes().find((n) => n.key === target.nodeKey);
    if (!node) return;
    panel.appendChild(heading(node.label));
    panel.appendChild(textDiv("resolution-description", node.description));
    if (node.iri) {
      const remove = document.createElement("button");
      remove.className = "delete-button";
      remove.textContent = "Delete entity";
      const iri = node.iri;
      remove.addEventListener("click", () => {
        void this.delegate.deleteEntity({ iri });
      });
      panel.appendChild(remove);
    }
  }

  private buildEdge(panel: HTMLElement, target: OverlayTarget): void {
    const edge = this.store.edges().find((e) => e.key === target.edgeKey);
    if (!edge) return;
    panel.appendChild(heading(edge.label));
    panel.appendChild(textDiv("resolution-description", edge.description));
    if (edge.propertyIri) {
      const link = document.createElement("a");
      link.href = edge.propertyIri;
      link.textContent = edge.propertyIri;
      link.target = "_blank";
      link.rel = "noreferrer";
      panel.appendChild(link);
    }
    if (edge.triple.provenance !== null) {
      panel.appendChild(this.searchBox("Search properties", async (query) => {
        return this.delegate.searchProperties(query);
      }, (candidate) => {
        void this.delegate.replaceProperty(edge, candidate);
      }));
    }
    const remove = document.createElement("button");
    remove.className = "delete-button";
    remove.textContent = "Delete relation";
    remove.addEventListener("click", () => {
      void this.delegate.deleteRelation(edge);
    });
    panel.appendChild(remove);
  }

  private buildAddEntity(panel: HTMLElement, target: OverlayTarget): void {
    const span = target.span;
    const session = this.store.getState().session;
    if (!span || session === null) return;
    const surface = session.text.slice(span[0], span[1]);
    panel.appendChild(heading(`Annotate "${surface}"`));
    panel.appendChild(this.searchBox("Search entities", async (query) => {
      return this.delegate.searchEntities(query);
    }, (candidate) => {
      void this.delegate.addEntity(
        span, candidate.iri, candidate.label, candidate.description);
    }));
    const unlinked = document.createElement("button");
    unlinked.className = "leave-unlinked-button";
    unlinked.textContent = "Leave unlinked";
    unlinked.addEventListener("click", () => {
      void this.delegate.addEntity(span, null);
    });
    panel.appendChild(unlinked);
  }

  private buildAddRelation(panel: HTMLElement, target: OverlayTarget): void {
    const subjectSpan = target.subjectSpan;
    const objectSpan = target.objectSpan;
    const session = this.store.getState().session;
    if (!subjectSpan || !objectSpan || session === null) return;
    const subject = session.text.slice(subjectSpan[0], subjectSpan[1]);
    const object = session.text.slice(objectSpan[0], objectSpan[1]);
    panel.appendChild(heading(`Relate "${subject}" to "${object}"`));
    panel.appendChild(this.searchBox("Search properties", async (query) => {
      return this.delegate.searchProperties(query);
    }, (candidate) => {
      void this.delegate.addRelation(subjectSpan, objectSpan, candidate);
    }));
  }

  private searchBox(
    placeholder: string,
    search: (query: string) => Promise<CandidatePayload[]>,
    pick: (candidate: CandidatePayload) => void,
  ): HTMLElement {
    const wrapper = document.createElement("div");
    wrapper.className = "search-box";
    const input = document.createElement("input");
    input.type = "text";
    input.placeholder = placeholder;
    wrapper.appendChild(input);
    const results = document.createElement("ul");
    results.className = "search-results";
    wrapper.appendChild(results);
    let requestId = 0;
    input.addEventListener("input", () => {
      const query = input.value.trim();
      const current = ++requestId;
      if (query === "") {
        results.textContent = "";
        return;
      }
      void search(query).then((candidates) => {
        if (current !== requestId) return;
        results.textContent = "";
        for (const candidate of candidates.slice(0, 20)) {
          const item = document.createElement("li");
          item.appendChild(candidateButton(candidate, () => pick(candidate)));
          results.appendChild(item);
        }
      }).catch(() => {
        if (current === requestId) results.textContent = "";
      });
    });
    return wrapper;
  }
}

function heading(text: string): HTMLElement {
  const el = document.createElement("h2");
  el.textContent = text;
  return el;
}

function textDiv(className: string, text: string): HTMLElement {
  const el = document.createElement("div");
  el.className = className;
  el.textContent = text;
  return el;
}

function candidateButton(
  candidate: CandidatePayload,
  onPick: () => void,
): HTMLButtonElement {
  const button = document.createElement("button");
  button.className = "candidate";
  button.dataset.iri = candidate.iri;
  const label = document.createElement("span");
  label.className = "candidate-label";
  label.textContent = candidate.label;
  button.appendChild(label);
  if (candidate.description) {
    const description = document.createElement("span");
    description.className = "candidate-description";
    description.textContent = candidate.description;
    button.appendChild(description);
  }
  button.addEventListener("click", onPick);
  return button;
}
