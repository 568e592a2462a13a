/** Text pane: annotated source text plus span selection for new entities.
 *
 * Every mention in the last payload is rendered as an annotation span with a
 * resolution badge; relations are never annotated in the text.
 */

import type { Annotation } from "../model.js";
import type { AppState, Store } from "../store.js";

export interface EditorDelegate {
  onAnnotationClick(annotation: Annotation): void;
  onSpanProposed(start: number, end: number): void;
}

/** Character offset of (node, offsetInNode) within root's text content. */
export function textOffsetIn(
  root: Node,
  target: Node,
  offsetInTarget: number,
): number | null {
  let offset = 0;
  const walker = document.createTreeWalker(root, NodeFilter.SHOW_TEXT);
  let current = walker.nextNode();
  while (current !== null) {
    if (current === target) return offset + offsetInTarget;
    offset += (current.textContent ?? "").length;
    current = walker.nextNode();
  }
  if (target === root) return offsetInTarget === 0 ? 0 : offset;
  return null;
}

export class EditorView {
  private readonly container: HTMLElement;
  private readonly store: Store;
  private readonly delegate: EditorDelegate;
  private lastSession: unknown = null;
  private lastHover: string | null = null;

  constructor(container: HTMLElement, store: Store, delegate: EditorDelegate) {
    this.container = container;
    this.store = store;
    this.delegate = delegate;
    this.container.addEventListener("mouseup", () => this.handleSelection());
  }

  render(state: AppState): void {
    if (state.session !== this.lastSession) {
      this.rebuild();
      this.lastSession = state.session;
    }
    if (state.hoverKey !== this.lastHover) {
      this.applyHover(state.hoverKey);
      this.lastHover = state.hoverKey;
    }
  }

  private rebuild(): void {
    const session = this.store.getState().session;
    this.container.textContent = "";
    if (session === null) return;
    const text = session.text;
    const annotations = this.store.annotations();
    let cursor = 0;
    for (const annotation of annotations) {
      const [start, end] = annotation.span;
      if (start > cursor) {
        this.container.appendChild(
          document.createTextNode(text.slice(cursor, start)),
        );
      }
      this.container.appendChild(this.buildAnnotation(annotation, text));
      cursor = end;
    }
    if (cursor < text.length) {
      this.container.appendChild(document.createTextNode(text.slice(cursor)));
    }
    this.applyHover(this.store.getState().hoverKey);
  }

  private buildAnnotation(annotation: Annotation, text: string): HTMLElement {
    const [start, end] = annotation.span;
    const el = document.createElement("span");
    el.className = `annotation ${annotation.badge}`;
    el.textContent = text.slice(start, end);
    el.dataset.span = `${start},${end}`;
    if (annotation.nodeKey !== null) el.dataset.nodeKey = annotation.nodeKey;
    el.title = this.tooltipFor(annotation);
    el.addEventListener("mouseenter", () => {
      this.store.setHover(annotation.nodeKey);
    });
    el.addEventListener("mouseleave", () => {
      this.store.setHover(null);
    });
    el.addEventListener("click", (event) => {
      event.stopPropagation();
      this.delegate.onAnnotationClick(annotation);
    });
    return el;
  }

  private tooltipFor(annotation: Annotation): string {
    const mention = annotation.mention;
    if (mention.kind === "linked") {
      const selected = mention.candidates[mention.selected];
      if (selected) return `${selected.label}: ${selected.description}`;
    }
    if (mention.kind === "literal" && mention.literal) {
      return `${mention.literal.kind} literal ${mention.literal.lexical}`;
    }
    return "unlinked entity";
  }

  private applyHover(hoverKey: string | null): void {
    const spans = this.container.querySelectorAll<HTMLElement>(".annotation");
    for (const span of spans) {
      const active = hoverKey !== null && span.dataset.nodeKey === hoverKey;
      span.classList.toggle("active", active);
    }
  }

  /** Turn the current text selection into a proposed new-entity span. */
  private handleSelection(): void {
    const session = this.store.getState().session;
    if (session === null) return;
    const selection = document.getSelection();
    if (selection === null || selection.isCollapsed) return;
    if (selection.rangeCount === 0) return;
    const range = selection.getRangeAt(0);
    if (!this.container.contains(range.startContainer) ||
        !this.container.contains(range.endContainer)) {
      return;
    }
    const start = textOffsetIn(
      this.container, range.startContainer, range.startOffset);
    const end = textOffsetIn(
      this.container, range.endContainer, range.endOffset);
    if (start === null || end === null) return;
    this.proposeSpan(Math.min(start, end), Math.max(start, end));
  }

  /** Validate and forward a proposed span; trims surrounding whitespace. */
  proposeSpan(start: number, end: number): void {
    const session = this.store.getState().session;
    if (session === null) return;
    const text = session.text;
    while (start < end && /\s/.test(text[start] as string)) start++;
    while (end > start && /\s/.test(text[end - 1] as string)) end--;
    if (start >= end) return;
    this.delegate.onSpanProposed(start, end);
  }
}
