/**
 * Thin browser glue: materialise a VNode tree into real elements and wire
 * the declared event handlers. When a handler fires, it receives a JSON
 * payload mapping the class of every form control inside the enclosing
 * <section> to its current value, so view handlers can read form state
 * without touching the DOM themselves.
 */

import type { VNode } from "./views.js";

function formPayload(el: Element): string {
  const section = el.closest("section") ?? el.ownerDocument.body;
  const values: Record<string, string> = {};
  for (const control of section.querySelectorAll("input, textarea, select")) {
    const cls = control.getAttribute("class");
    if (cls) {
      values[cls] = (control as HTMLInputElement).value;
    }
  }
  return JSON.stringify(values);
}

export function render(node: VNode | string, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    el.setAttribute(key, value);
  }
  if (node.on) {
    for (const [event, handler] of Object.entries(node.on)) {
      el.addEventListener(event, () => handler(formPayload(el)));
    }
  }
  for (const child of node.children) {
    el.appendChild(render(child, doc));
  }
  return el;
}

export function mount(root: Element, node: VNode): void {
  root.replaceChildren(render(node, root.ownerDocument));
}
