/**
 * Typed client for the crowdenergy JSON API. Every view in the app renders
 * exclusively from the response shapes defined here — the client performs
 * no statistical computation of its own.
 */

export type QuestionType = "numeric" | "yes_no" | "likert5";
export type QuestionStatus = "pending" | "approved" | "rejected";

export interface Question {
  id: string;
  text: string;
  qtype: QuestionType;
  status: QuestionStatus;
  author: string;
  created_at: string | null;
  likert_levels: Record<string, string> | null;
}

export interface AuditEntry {
  question_id: string;
  text: string;
  contribution_kwh: number;
}

export interface UsageSeries {
  days: string[];
  user: (number | null)[];
  group_mean: (number | null)[];
}

export interface AuditPayload {
  user_id: number;
  predicted_deviation_kwh: number;
  entries: AuditEntry[];
  series: UsageSeries;
}

export interface Stats {
  users: number;
  questions: { pending: number; approved: number; rejected: number };
  answers: number;
  min_column_missing_fraction: number | null;
}

export type AnswerValue = number | "yes" | "no";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function unwrap<T>(res: Response): Promise<T> {
  const body = await res.json().catch(() => null);
  if (!res.ok) {
    const err = body?.error ?? {};
    throw new ApiError(res.status, err.code ?? "unknown", err.message ?? res.statusText);
  }
  return body as T;
}

export class Client {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((r) => unwrap<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return fetch(this.url(path)).then((r) => unwrap<T>(r));
  }

  health(): Promise<{ status: string }> {
    return this.get("/api/health");
  }

  stats(): Promise<Stats> {
    return this.get("/api/stats");
  }

  createParticipant(): Promise<{ id: number }> {
    return this.post("/api/participants");
  }

  submitQuestion(author: string, text: string, qtype: QuestionType): Promise<Question> {
    return this.post("/api/questions", { author, text, qtype });
  }

  pendingQuestions(): Promise<Question[]> {
    return this.get<{ questions: Question[] }>("/api/questions/pending").then(
      (b) => b.questions,
    );
  }

  moderate(questionId: string, decision: "approve" | "reject", reason?: string): Promise<Question> {
    return this.post(`/api/questions/${questionId}/moderate`, { decision, reason });
  }

  nextQuestions(user: number, limit: number): Promise<Question[]> {
    return this.get<{ questions: Question[] }>(
      `/api/questions/next?user=${user}&limit=${limit}`,
    ).then((b) => b.questions);
  }

  postAnswer(user: number, questionId: string, value: AnswerValue): Promise<unknown> {
    return this.post("/api/answers", {
      user_id: user,
      question_id: questionId,
      value,
    });
  }

  audit(user: number): Promise<AuditPayload> {
    return this.get(`/api/users/${user}/audit`);
  }

  usage(user: number): Promise<{ user_id: number; series: UsageSeries }> {
    return this.get(`/api/users/${user}/usage`);
  }

  refreshModel(wait = false): Promise<{ job: number; status: string; error: string | null }> {
    return this.post(`/api/model/refresh?wait=${wait}`);
  }
}
