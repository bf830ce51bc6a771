/**
 * Browser entry point: builds the app shell, joins as a participant, and
 * re-renders the active tab whenever the store changes.
 */

import { Client } from "./api.js";
import { AppStore } from "./state.js";
import { mount } from "./dom.js";
import {
  answerCard,
  askComposer,
  auditPending,
  auditView,
  emptyQueue,
  h,
  moderationPanel,
  statsBar,
} from "./views.js";
import type { Tab, ViewState } from "./state.js";
import type { VNode } from "./views.js";

const TABS: { id: Tab; label: string }[] = [
  { id: "answer", label: "Answer" },
  { id: "ask", label: "Ask" },
  { id: "audit", label: "My audit" },
  { id: "moderate", label: "Moderate" },
];

function page(store: AppStore): VNode {
  const s: ViewState = store.state;
  let body: VNode;
  if (s.tab === "answer") {
    const card = s.queue[0];
    body = card
      ? answerCard(
          card,
          { submit: (v) => void store.answer(v), skip: () => store.skip() },
          s.answerError,
        )
      : emptyQueue();
  } else if (s.tab === "ask") {
    body = askComposer({ submit: (text, qtype) => void store.ask(text, qtype) }, s.lastAsked);
  } else if (s.tab === "audit") {
    body = s.audit ? auditView(s.audit) : auditPending();
  } else {
    body = moderationPanel(s.pending, {
      decide: (id, decision) => void store.decide(id, decision),
    });
  }
  const nav = h(
    "nav",
    { class: "tabs" },
    TABS.map(({ id, label }) =>
      h(
        "button",
        { class: s.tab === id ? "tab tab-active" : "tab", "data-tab": id },
        [label],
        { click: () => void store.setTab(id) },
      ),
    ),
  );
  const children: VNode[] = [
    h("header", { class: "masthead" }, [
      h("h1", {}, ["crowdenergy"]),
      h("p", { class: "whoami" }, [
        s.userId === null ? "joining..." : `participant #${s.userId}`,
      ]),
    ]),
    nav,
    body,
  ];
  if (s.banner) children.push(h("div", { class: "banner", role: "alert" }, [s.banner]));
  if (s.stats) children.push(statsBar(s.stats));
  return h("main", { class: "app" }, children);
}

export function boot(doc: Document, baseUrl: string): AppStore {
  const store = new AppStore(new Client(baseUrl));
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  store.subscribe(() => mount(root, page(store)));
  mount(root, page(store));
  void store.start();
  return store;
}

if (typeof document !== "undefined" && typeof window !== "undefined") {
  boot(document, window.location.origin);
}
