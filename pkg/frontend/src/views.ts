/**
 * Pure view layer. Every function here maps data to a tree of plain
 * {@link VNode} objects -- no DOM access, no fetching -- so the whole render
 * path is unit-testable under node. `dom.ts` turns the tree into elements.
 */

import type { AuditPayload, Question, Stats, UsageSeries } from "./api.js";

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
  /** event name -> handler, wired up by the dom layer */
  on?: Record<string, (payload?: string) => void>;
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: (VNode | string)[] = [],
  on?: Record<string, (payload?: string) => void>,
): VNode {
  return on ? { tag, attrs, children, on } : { tag, attrs, children };
}

/** Depth-first text content of a node, for assertions and accessibility. */
export function textOf(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join(" ").replace(/\s+/g, " ").trim();
}

export function findAll(node: VNode | string, pred: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits = pred(node) ? [node] : [];
  return hits.concat(...node.children.map((c) => findAll(c, pred)));
}

export function findByClass(node: VNode, cls: string): VNode[] {
  return findAll(node, (n) => (n.attrs.class ?? "").split(/\s+/).includes(cls));
}

/**
 * Event payloads are a JSON object mapping the class of each form control in
 * the enclosing section to its current value (see `dom.ts`).
 */
export function readForm(payload: string | undefined): Record<string, string> {
  if (!payload) return {};
  try {
    const parsed = JSON.parse(payload);
    return typeof parsed === "object" && parsed !== null ? parsed : {};
  } catch {
    return {};
  }
}

// ---------------------------------------------------------------------------
// Answer flow

export const LIKERT_LABELS = [
  "Strongly disagree",
  "Disagree",
  "Neutral",
  "Agree",
  "Strongly agree",
];

export interface AnswerCardHandlers {
  submit: (value: string) => void;
  skip: () => void;
}

/**
 * One question card. Numeric questions get a free-text input validated
 * client-side; yes/no gets two buttons; five-level agreement gets exactly
 * five labelled options.
 */
export function answerCard(
  q: Question,
  handlers: AnswerCardHandlers,
  error: string | null = null,
): VNode {
  const controls: VNode[] = [];
  if (q.qtype === "likert5") {
    for (let level = 1; level <= 5; level++) {
      controls.push(
        h(
          "button",
          { class: "likert-option", "data-value": String(level) },
          [LIKERT_LABELS[level - 1] ?? String(level)],
          { click: () => handlers.submit(String(level)) },
        ),
      );
    }
  } else if (q.qtype === "yes_no") {
    for (const v of ["yes", "no"] as const) {
      controls.push(
        h("button", { class: "yn-option", "data-value": v }, [v], {
          click: () => handlers.submit(v),
        }),
      );
    }
  } else {
    controls.push(
      h("input", {
        class: "numeric-input",
        type: "text",
        inputmode: "decimal",
        placeholder: "a number",
      }),
      h("button", { class: "numeric-submit" }, ["Submit"], {
        click: (payload) => handlers.submit(readForm(payload)["numeric-input"] ?? ""),
      }),
    );
  }
  const body: (VNode | string)[] = [
    h("p", { class: "question-text" }, [q.text]),
    h("div", { class: "answer-controls" }, controls),
    h("button", { class: "skip" }, ["Skip"], { click: () => handlers.skip() }),
  ];
  if (error) body.push(h("p", { class: "answer-error", role: "alert" }, [error]));
  return h("section", { class: "answer-card", "data-question": q.id }, body);
}

/** Client-side check mirroring the server's numeric validation. */
export function parseNumeric(
  raw: string,
): { ok: true; value: number } | { ok: false; message: string } {
  const trimmed = raw.trim();
  if (trimmed === "") return { ok: false, message: "Enter a number." };
  const value = Number(trimmed);
  if (!Number.isFinite(value)) return { ok: false, message: "That is not a number." };
  return { ok: true, value };
}

export function emptyQueue(): VNode {
  return h("section", { class: "answer-card answer-done" }, [
    h("p", {}, ["You have answered every open question -- check back later."]),
  ]);
}

// ---------------------------------------------------------------------------
// Ask flow

export interface AskHandlers {
  submit: (text: string, qtype: string) => void;
}

/**
 * The composer nudges participants toward questions they believe *predict*
 * electricity usage, and explains the moderation step up front.
 */
export function askComposer(handlers: AskHandlers, submitted: Question | null = null): VNode {
  const children: (VNode | string)[] = [
    h("h2", {}, ["Ask the community"]),
    h("p", { class: "ask-prompt" }, [
      "What do you think predicts how much electricity a household uses?",
      " Ask a question whose answer would separate heavy users from light ones.",
    ]),
    h("textarea", { class: "ask-text", rows: "3" }),
    h("select", { class: "ask-type" }, [
      h("option", { value: "yes_no" }, ["Yes / no"]),
      h("option", { value: "likert5" }, ["Agreement (5 levels)"]),
      h("option", { value: "numeric" }, ["Number"]),
    ]),
    h("button", { class: "ask-submit" }, ["Submit question"], {
      click: (payload) => {
        const form = readForm(payload);
        handlers.submit(form["ask-text"] ?? "", form["ask-type"] ?? "yes_no");
      },
    }),
  ];
  if (submitted) {
    children.push(
      h("p", { class: "ask-confirmation" }, [
        `Thanks -- "${submitted.text}" is awaiting moderation before others can see it.`,
      ]),
    );
  }
  return h("section", { class: "ask-composer" }, children);
}

// ---------------------------------------------------------------------------
// Audit view

export const MAX_AUDIT_BARS = 10;

/**
 * The virtual energy audit: at most ten signed horizontal bars, one per
 * contributing question, ordered exactly as the API returned them (largest
 * magnitude first), plus the usage-comparison strip.
 */
export function auditView(audit: AuditPayload): VNode {
  const entries = audit.entries.slice(0, MAX_AUDIT_BARS);
  const maxAbs = Math.max(1e-9, ...entries.map((e) => Math.abs(e.contribution_kwh)));
  const bars = entries.map((e) => {
    const width = (100 * Math.abs(e.contribution_kwh)) / maxAbs;
    const sign = e.contribution_kwh >= 0 ? "pos" : "neg";
    return h("li", { class: "audit-row", "data-question": e.question_id }, [
      h("span", { class: "audit-label" }, [e.text]),
      h("span", {
        class: `audit-bar audit-${sign}`,
        style: `width:${width.toFixed(1)}%`,
        "data-kwh": e.contribution_kwh.toFixed(2),
      }),
      h("span", { class: "audit-value" }, [
        `${e.contribution_kwh >= 0 ? "+" : ""}${e.contribution_kwh.toFixed(1)} kWh`,
      ]),
    ]);
  });
  const sign = audit.predicted_deviation_kwh >= 0 ? "+" : "";
  return h("section", { class: "audit-view" }, [
    h("h2", {}, ["Your virtual energy audit"]),
    h("p", { class: "audit-headline" }, [
      `Your answers predict ${sign}${audit.predicted_deviation_kwh.toFixed(1)} kWh/month`,
      " relative to the community average.",
    ]),
    h("ol", { class: "audit-bars" }, bars),
    usageStrip(audit.series),
  ]);
}

export function auditPending(): VNode {
  return h("section", { class: "audit-view audit-pending" }, [
    h("p", {}, [
      "Your audit is not ready yet -- the model refreshes as answers and meter data arrive.",
    ]),
  ]);
}

/** Daily usage vs the group mean, as a compact two-row sparkline table. */
export function usageStrip(series: UsageSeries): VNode {
  const cells = series.days.map((day, i) => {
    const mine = series.user[i];
    const group = series.group_mean[i];
    return h("td", { class: "usage-cell", "data-day": day }, [
      mine === null || mine === undefined ? "-" : mine.toFixed(1),
      " / ",
      group === null || group === undefined ? "-" : group.toFixed(1),
    ]);
  });
  return h("table", { class: "usage-strip" }, [
    h("caption", {}, ["Daily kWh: you / group average"]),
    h("tr", {}, cells),
  ]);
}

// ---------------------------------------------------------------------------
// Moderation panel

export interface ModerationHandlers {
  decide: (questionId: string, decision: "approve" | "reject") => void;
}

export function moderationPanel(pending: Question[], handlers: ModerationHandlers): VNode {
  const rows = pending.map((q) =>
    h("li", { class: "mod-row", "data-question": q.id }, [
      h("span", { class: "mod-text" }, [q.text]),
      h("span", { class: "mod-type" }, [q.qtype]),
      h("button", { class: "mod-approve" }, ["Approve"], {
        click: () => handlers.decide(q.id, "approve"),
      }),
      h("button", { class: "mod-reject" }, ["Reject"], {
        click: () => handlers.decide(q.id, "reject"),
      }),
    ]),
  );
  return h("section", { class: "moderation-panel" }, [
    h("h2", {}, ["Moderation queue"]),
    pending.length === 0
      ? h("p", { class: "mod-empty" }, ["No questions waiting."])
      : h("ul", { class: "mod-list" }, rows),
  ]);
}

// ---------------------------------------------------------------------------
// Shell

export function statsBar(stats: Stats): VNode {
  return h("footer", { class: "stats-bar" }, [
    `${stats.users} participants, ${stats.questions.approved} live questions, `,
    `${stats.answers} answers`,
  ]);
}
