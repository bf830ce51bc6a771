/**
 * Session state and the actions that drive it. The store is deliberately
 * dumb: it holds the data each view needs, applies actions by calling the
 * API client, and notifies a single subscriber when anything changes.
 * Views re-render from the whole state on every notification.
 */

import { ApiError, Client } from "./api.js";
import type { AuditPayload, Question, Stats } from "./api.js";
import { parseNumeric } from "./views.js";

export type Tab = "answer" | "ask" | "audit" | "moderate";

export interface ViewState {
  tab: Tab;
  userId: number | null;
  /** upcoming question cards, front of the array is on screen */
  queue: Question[];
  queueExhausted: boolean;
  answerError: string | null;
  lastAsked: Question | null;
  pending: Question[];
  audit: AuditPayload | null;
  auditPending: boolean;
  stats: Stats | null;
  banner: string | null;
}

const QUEUE_BATCH = 5;

export class AppStore {
  state: ViewState = {
    tab: "answer",
    userId: null,
    queue: [],
    queueExhausted: false,
    answerError: null,
    lastAsked: null,
    pending: [],
    audit: null,
    auditPending: false,
    stats: null,
    banner: null,
  };

  private listener: (() => void) | null = null;

  constructor(readonly client: Client) {}

  subscribe(listener: () => void): void {
    this.listener = listener;
  }

  private touch(): void {
    this.listener?.();
  }

  private fail(err: unknown): void {
    this.state.banner = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.touch();
  }

  /** Join as a fresh participant and load the first answer batch. */
  async start(): Promise<void> {
    const { id } = await this.client.createParticipant();
    this.state.userId = id;
    await Promise.all([this.refillQueue(), this.refreshStats()]);
    this.touch();
  }

  async refreshStats(): Promise<void> {
    this.state.stats = await this.client.stats();
    this.touch();
  }

  async refillQueue(): Promise<void> {
    if (this.state.userId === null) return;
    const seen = new Set(this.state.queue.map((q) => q.id));
    const batch = await this.client.nextQuestions(this.state.userId, QUEUE_BATCH);
    const fresh = batch.filter((q) => !seen.has(q.id));
    this.state.queue.push(...fresh);
    this.state.queueExhausted = this.state.queue.length === 0;
    this.touch();
  }

  /** Drop the current card without answering; it may come back later. */
  skip(): void {
    this.state.queue.shift();
    this.state.answerError = null;
    this.touch();
    if (this.state.queue.length === 0) void this.refillQueue();
  }

  /**
   * Validate and post an answer for the card on screen. The card is removed
   * optimistically; on a server rejection it is restored with the error.
   */
  async answer(raw: string): Promise<void> {
    const card = this.state.queue[0];
    if (!card || this.state.userId === null) return;
    let value: number | "yes" | "no";
    if (card.qtype === "numeric") {
      const parsed = parseNumeric(raw);
      if (!parsed.ok) {
        this.state.answerError = parsed.message;
        this.touch();
        return;
      }
      value = parsed.value;
    } else if (card.qtype === "yes_no") {
      value = raw === "yes" ? "yes" : "no";
    } else {
      value = Number(raw);
    }
    this.state.queue.shift();
    this.state.answerError = null;
    this.touch();
    try {
      await this.client.postAnswer(this.state.userId, card.id, value);
    } catch (err) {
      this.state.queue.unshift(card);
      this.state.answerError = err instanceof ApiError ? err.message : String(err);
      this.touch();
      return;
    }
    if (this.state.queue.length === 0) await this.refillQueue();
    void this.refreshStats();
  }

  async ask(text: string, qtype: string): Promise<void> {
    if (this.state.userId === null) return;
    try {
      this.state.lastAsked = await this.client.submitQuestion(
        String(this.state.userId),
        text,
        qtype as Question["qtype"],
      );
      this.touch();
    } catch (err) {
      this.fail(err);
    }
  }

  async loadPending(): Promise<void> {
    this.state.pending = await this.client.pendingQuestions();
    this.touch();
  }

  async decide(questionId: string, decision: "approve" | "reject"): Promise<void> {
    try {
      await this.client.moderate(questionId, decision);
    } catch (err) {
      this.fail(err);
    }
    await this.loadPending();
  }

  async loadAudit(): Promise<void> {
    if (this.state.userId === null) return;
    try {
      this.state.audit = await this.client.audit(this.state.userId);
      this.state.auditPending = false;
    } catch (err) {
      if (err instanceof ApiError && (err.code === "model_pending" || err.code === "no_meter_data")) {
        this.state.audit = null;
        this.state.auditPending = true;
      } else {
        this.fail(err);
        return;
      }
    }
    this.touch();
  }

  async setTab(tab: Tab): Promise<void> {
    this.state.tab = tab;
    this.touch();
    if (tab === "moderate") await this.loadPending();
    if (tab === "audit") await this.loadAudit();
    if (tab === "answer" && this.state.queue.length === 0) await this.refillQueue();
  }
}
