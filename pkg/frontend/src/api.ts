// Typed client for the session HTTP API. All scoring authority lives on the
// server; this module only transports JSON and classifies errors.

export interface VisibleEdge {
  target: number;
  reward: number;
}

export interface TrialState {
  network_id: string;
  current_node: number;
  move_index: number;
  accrued_reward: number;
  edges: VisibleEdge[];
  pending_correction: number | null;
}

export interface SessionState {
  phase: string;
  generation: number;
  seat_index: number;
  step: number;
  total_steps: number;
  repeat_tally: number;
  social_index?: number;
  trial?: TrialState;
}

export interface MoveResult {
  reward?: number;
  total?: number;
  move_index: number;
  trial_complete?: boolean;
  score?: number;
  correct_move?: number | null;
  repeat_tally?: number;
}

export interface CandidateCard {
  label: string;
  average_score: number;
}

export interface CandidatesPayload {
  candidates: CandidateCard[];
  own_average_score: number | null;
}

export interface ReplayPayload {
  network_id: string;
  moves: number[];
  rewards: number[];
  total: number;
  step_ms: number;
}

export interface ClaimPayload {
  session_token: string;
  generation: number;
  seat_index: number;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(body.error ?? "http_error", body.message ?? res.statusText, res.status);
  }
  return body as T;
}

export class SessionApi {
  private moveInFlight: Promise<MoveResult> | null = null;

  constructor(
    private readonly base: string,
    public token: string | null = null,
  ) {}

  private session(path: string): string {
    if (!this.token) throw new ApiError("no_session", "no session claimed", 0);
    return `${this.base}/sessions/${this.token}${path}`;
  }

  async createPopulation(condition: string): Promise<string> {
    const body = await request<{ population_id: string }>(`${this.base}/populations`, {
      method: "POST",
      body: JSON.stringify({ condition }),
    });
    return body.population_id;
  }

  async scriptedFill(populationId: string, generations?: number[]): Promise<void> {
    await request(`${this.base}/populations/${populationId}/scripted`, {
      method: "POST",
      body: JSON.stringify(generations ? { generations } : {}),
    });
  }

  async claim(populationId: string): Promise<ClaimPayload> {
    const payload = await request<ClaimPayload>(
      `${this.base}/populations/${populationId}/seats/claim`,
      { method: "POST", body: "{}" },
    );
    this.token = payload.session_token;
    return payload;
  }

  async state(): Promise<SessionState> {
    return request<SessionState>(this.session("/state"));
  }

  async candidates(): Promise<CandidatesPayload> {
    return request<CandidatesPayload>(this.session("/candidates"));
  }

  async select(label: string): Promise<SessionState> {
    return request<SessionState>(this.session("/select"), {
      method: "POST",
      body: JSON.stringify({ candidate_label: label }),
    });
  }

  async replay(): Promise<ReplayPayload> {
    return request<ReplayPayload>(this.session("/replay"));
  }

  // Moves are serialized: a second call while one is pending returns the
  // pending acknowledgment instead of double-submitting.
  async move(target: number): Promise<MoveResult> {
    if (this.moveInFlight) return this.moveInFlight;
    const p = request<MoveResult>(this.session("/move"), {
      method: "POST",
      body: JSON.stringify({ target }),
    }).finally(() => {
      this.moveInFlight = null;
    });
    this.moveInFlight = p;
    return p;
  }

  async advance(): Promise<SessionState> {
    return request<SessionState>(this.session("/advance"), { method: "POST", body: "{}" });
  }

  async strategy(text: string): Promise<SessionState> {
    return request<SessionState>(this.session("/strategy"), {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  async exportRows(populationId: string): Promise<Record<string, unknown>[]> {
    const res = await fetch(`${this.base}/populations/${populationId}/export`);
    const text = await res.text();
    return text
      .split("\n")
      .filter((line) => line.length > 0)
      .map((line) => JSON.parse(line));
  }
}
