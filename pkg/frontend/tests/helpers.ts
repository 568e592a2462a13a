/** Shared setup for DOM-level tests: mount the app against the mock API. */

import { ApiClient } from "../src/api.js";
import { createApp, type App } from "../src/app.js";
import { FIXTURE_TEXT } from "./fixture.js";
import { MockServer } from "./mockApi.js";

export interface Harness {
  app: App;
  mock: MockServer;
  root: HTMLElement;
}

export function mount(): Harness {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  const mock = new MockServer();
  const app = createApp(root, new ApiClient(mock.fetch));
  return { app, mock, root };
}

export async function mountWithSession(): Promise<Harness> {
  const harness = mount();
  const input = harness.root.querySelector<HTMLTextAreaElement>("#text-input");
  if (input !== null) input.value = FIXTURE_TEXT;
  await harness.app.construct(FIXTURE_TEXT);
  return harness;
}

/** Let queued promise continuations and timers run. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 4; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function annotationEls(root: HTMLElement): HTMLElement[] {
  return [
    ...root.querySelectorAll<HTMLElement>("#annotated-text .annotation"),
  ];
}

export function nodeEls(root: HTMLElement): SVGGElement[] {
  return [...root.querySelectorAll<SVGGElement>("#graph-svg g.node")];
}

export function edgeEls(root: HTMLElement): SVGGElement[] {
  return [...root.querySelectorAll<SVGGElement>("#graph-svg g.edge")];
}

export function overlayPanel(root: HTMLElement): HTMLElement | null {
  return root.querySelector<HTMLElement>("#overlay-root .overlay-panel");
}

export function hover(el: Element): void {
  el.dispatchEvent(new MouseEvent("mouseenter"));
}

export function unhover(el: Element): void {
  el.dispatchEvent(new MouseEvent("mouseleave"));
}

export function click(el: Element): void {
  el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

export function dblclick(el: Element): void {
  el.dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
}

export function setInput(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function nodeKeysOf(root: HTMLElement): string[] {
  return nodeEls(root)
    .map((n) => n.dataset.nodeKey ?? "")
    .sort();
}
