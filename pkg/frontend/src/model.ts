// View-model layer: derives what may be drawn from session state without
// ever widening it. Two invariants are enforced here rather than in the
// renderer: unexplored topology stays hidden, and every score shown is an
// API echo.

import type {
  MoveResult,
  ReplayPayload,
  SessionState,
  VisibleEdge,
} from "./api";

export const TOTAL_MOVES = 10;

export interface ClientView {
  phase: string;
  banner: string;
  networkId: string | null;
  currentNode: number | null;
  moveIndex: number;
  totalMoves: number;
  score: number;
  edges: VisibleEdge[];
  revealedNodes: number[];
  pathEdges: Array<[number, number]>;
  repeatTally: number;
  dashedHint: number | null;
  inputEnabled: boolean;
  feedback: string | null;
}

const BANNERS: Record<string, string> = {
  intro: "Welcome. Press continue to begin.",
  individual_learning: "Learning phase: find points on your own.",
  demonstrator_selection: "Choose a demonstrator to learn from.",
  observe: "Watch the demonstrator's solution.",
  repeat: "Repeat the demonstrator's moves (+100 / -100).",
  try_self: "Solve this network yourself.",
  demonstration: "Demonstration: your solution will be shown to others.",
  strategy_entry: "Describe your strategy in your own words.",
  done: "Session complete. Thank you.",
};

export function bannerFor(phase: string): string {
  return BANNERS[phase] ?? phase;
}

export function viewFromState(state: SessionState): ClientView {
  const trial = state.trial ?? null;
  return {
    phase: state.phase,
    banner: bannerFor(state.phase),
    networkId: trial?.network_id ?? null,
    currentNode: trial?.current_node ?? null,
    moveIndex: trial?.move_index ?? 0,
    totalMoves: TOTAL_MOVES,
    score: trial?.accrued_reward ?? 0,
    edges: trial?.edges ?? [],
    revealedNodes: trial ? [trial.current_node] : [],
    pathEdges: [],
    repeatTally: state.repeat_tally,
    dashedHint: trial?.pending_correction ?? null,
    inputEnabled:
      trial !== null &&
      trial.move_index < TOTAL_MOVES &&
      (state.phase === "individual_learning" ||
        state.phase === "repeat" ||
        state.phase === "try_self" ||
        state.phase === "demonstration"),
    feedback: null,
  };
}

// Tracks the uncovered part of one network across a trial: the nodes visited
// plus the frontier reachable from the current node. Nothing else exists as
// far as the view is concerned.
export class FrontierTracker {
  private visited: number[] = [];
  private path: Array<[number, number]> = [];

  constructor(start: number) {
    this.visited = [start];
  }

  advance(to: number): void {
    const from = this.visited[this.visited.length - 1];
    this.path.push([from, to]);
    if (!this.visited.includes(to)) this.visited.push(to);
  }

  reveal(view: ClientView): ClientView {
    const frontier = view.edges.map((e) => e.target);
    const revealed = [...this.visited];
    for (const node of frontier) {
      if (!revealed.includes(node)) revealed.push(node);
    }
    return { ...view, revealedNodes: revealed, pathEdges: [...this.path] };
  }
}

export function applyMoveResult(view: ClientView, result: MoveResult): ClientView {
  const next = { ...view };
  next.moveIndex = result.move_index;
  if (typeof result.total === "number") next.score = result.total;
  if (typeof result.repeat_tally === "number") next.repeatTally = result.repeat_tally;
  if (typeof result.score === "number") {
    next.feedback = result.score > 0 ? "+100" : result.score < 0 ? "-100" : "corrected";
    next.dashedHint = result.correct_move ?? null;
  } else if (typeof result.reward === "number") {
    next.feedback = result.reward >= 0 ? `+${result.reward}` : `${result.reward}`;
  }
  if (result.trial_complete || next.moveIndex >= TOTAL_MOVES) {
    next.inputEnabled = false;
  }
  return next;
}

// Replay playback: a cursor over the demonstrator's trajectory. The dashed
// hint always marks the next move; the revealed set is the path prefix plus
// the frontier at the current node, mirroring what the demonstrator saw.
export interface ReplayFrame {
  stepIndex: number;
  currentNode: number | null;
  dashedHint: number | null;
  score: number;
  revealedNodes: number[];
  pathEdges: Array<[number, number]>;
  finished: boolean;
}

export class ReplayPlayer {
  stepIndex = 0;
  paused = false;
  stepMs: number;

  constructor(
    private readonly replay: ReplayPayload,
    private readonly startNode: number,
    stepMs?: number,
  ) {
    this.stepMs = stepMs ?? replay.step_ms;
  }

  frame(): ReplayFrame {
    const prefix = this.replay.moves.slice(0, this.stepIndex);
    const nodes = [this.startNode];
    const pathEdges: Array<[number, number]> = [];
    let current = this.startNode;
    for (const move of prefix) {
      pathEdges.push([current, move]);
      if (!nodes.includes(move)) nodes.push(move);
      current = move;
    }
    const score = this.replay.rewards
      .slice(0, this.stepIndex)
      .reduce((a, b) => a + b, 0);
    const finished = this.stepIndex >= this.replay.moves.length;
    return {
      stepIndex: this.stepIndex,
      currentNode: current,
      dashedHint: finished ? null : this.replay.moves[this.stepIndex],
      score,
      revealedNodes: nodes,
      pathEdges,
      finished,
    };
  }

  tick(): ReplayFrame {
    if (!this.paused && this.stepIndex < this.replay.moves.length) {
      this.stepIndex += 1;
    }
    return this.frame();
  }

  pause(): void {
    this.paused = true;
  }

  resume(): void {
    this.paused = false;
  }
}
