// App controller: one session per tab. The session token is kept in
// sessionStorage so a reload reconstructs the exact view from GET /state.

import { ApiError, SessionApi } from "./api";
import {
  applyMoveResult,
  FrontierTracker,
  ReplayPlayer,
  viewFromState,
  type ClientView,
} from "./model";
import {
  renderAdvance,
  renderBanner,
  renderCandidates,
  renderError,
  renderGraph,
  renderMoveButtons,
  renderStrategyForm,
  type RenderHandlers,
} from "./render";

const TOKEN_KEY = "rewardnets.session";

export class App {
  private view: ClientView | null = null;
  private tracker: FrontierTracker | null = null;
  private trackedNetwork: string | null = null;
  private player: ReplayPlayer | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: SessionApi,
    private readonly root: HTMLElement,
    private readonly populationId: string,
  ) {}

  async start(): Promise<void> {
    const saved = sessionStorage.getItem(TOKEN_KEY);
    if (saved) {
      this.api.token = saved;
      try {
        await this.refresh();
        return;
      } catch {
        sessionStorage.removeItem(TOKEN_KEY);
      }
    }
    await this.api.claim(this.populationId);
    sessionStorage.setItem(TOKEN_KEY, this.api.token!);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const state = await this.api.state();
    let view = viewFromState(state);
    if (view.networkId && view.networkId !== this.trackedNetwork) {
      this.tracker = new FrontierTracker(view.currentNode!);
      this.trackedNetwork = view.networkId;
    }
    if (this.tracker && view.networkId) view = this.tracker.reveal(view);
    this.view = view;
    if (state.phase === "observe") {
      await this.startReplay();
      return;
    }
    this.draw();
  }

  private handlers(): RenderHandlers {
    return {
      onMove: (target) => void this.playMove(target),
      onAdvance: () => void this.advance(),
      onSelect: (label) => void this.select(label),
      onStrategy: (text) => void this.submitStrategy(text),
    };
  }

  private draw(extra?: HTMLElement): void {
    if (!this.view) return;
    this.root.replaceChildren();
    this.root.appendChild(renderBanner(this.view));
    if (this.view.networkId) {
      this.root.appendChild(renderGraph(this.view));
      this.root.appendChild(renderMoveButtons(this.view, this.handlers()));
    }
    if (this.view.phase === "intro") {
      this.root.appendChild(renderAdvance(this.handlers(), "Continue"));
    }
    if (this.view.phase === "strategy_entry") {
      this.root.appendChild(renderStrategyForm(this.handlers()));
    }
    if (extra) this.root.appendChild(extra);
    if (this.view.phase === "demonstrator_selection") {
      void this.showCandidates();
    }
  }

  private fail(err: unknown, retry: () => void): void {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : `${err}`;
    this.root.appendChild(renderError(message, retry));
  }

  async playMove(target: number): Promise<void> {
    if (!this.view?.inputEnabled) return;
    try {
      const result = await this.api.move(target);
      // only advance the uncovered frontier when the server accepted a step
      const stepped =
        typeof result.reward === "number" ||
        (typeof result.score === "number" && result.score >= 0);
      if (stepped && this.tracker) this.tracker.advance(target);
      this.view = applyMoveResult(this.view, result);
      if (result.trial_complete) {
        await this.refresh();
      } else {
        await this.refresh();
      }
    } catch (err) {
      if (err instanceof ApiError && (err.code === "illegal_move" || err.code === "episode_over")) {
        await this.refresh(); // state stays server-authoritative
      } else {
        this.fail(err, () => void this.playMove(target));
      }
    }
  }

  async advance(): Promise<void> {
    try {
      await this.api.advance();
      await this.refresh();
    } catch (err) {
      this.fail(err, () => void this.advance());
    }
  }

  async showCandidates(): Promise<void> {
    try {
      const payload = await this.api.candidates();
      const panel = renderCandidates(payload, this.handlers());
      this.root.appendChild(panel);
    } catch (err) {
      this.fail(err, () => void this.showCandidates());
    }
  }

  async select(label: string): Promise<void> {
    if (!label) return; // empty selection blocked client-side
    try {
      await this.api.select(label);
      await this.refresh();
    } catch (err) {
      this.fail(err, () => void this.select(label));
    }
  }

  async submitStrategy(text: string): Promise<void> {
    try {
      await this.api.strategy(text);
      await this.refresh();
    } catch (err) {
      this.fail(err, () => void this.submitStrategy(text));
    }
  }

  async startReplay(): Promise<void> {
    try {
      const replay = await this.api.replay();
      const state = await this.api.state();
      const start = state.trial!.current_node;
      this.player = new ReplayPlayer(replay, start);
      this.drawReplayFrame();
      this.timer = setInterval(() => this.replayTick(), this.player.stepMs);
    } catch (err) {
      this.fail(err, () => void this.startReplay());
    }
  }

  private drawReplayFrame(): void {
    if (!this.player || !this.view) return;
    const frame = this.player.frame();
    this.view = {
      ...this.view,
      currentNode: frame.currentNode,
      score: frame.score,
      revealedNodes: frame.revealedNodes,
      pathEdges: frame.pathEdges,
      dashedHint: frame.dashedHint,
      edges: [],
      inputEnabled: false,
      moveIndex: frame.stepIndex,
    };
    const controls = document.createElement("div");
    controls.className = "replay-controls";
    const pause = document.createElement("button");
    pause.type = "button";
    pause.textContent = this.player.paused ? "Resume" : "Pause";
    pause.addEventListener("click", () => {
      if (!this.player) return;
      this.player.paused ? this.player.resume() : this.player.pause();
      this.drawReplayFrame();
    });
    controls.appendChild(pause);
    if (frame.finished) {
      controls.appendChild(renderAdvance(this.handlers(), "Continue to repeat"));
    }
    this.draw(controls);
  }

  private replayTick(): void {
    if (!this.player) return;
    const frame = this.player.tick();
    this.drawReplayFrame();
    if (frame.finished && this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const base = params.get("api") ?? "";
  const api = new SessionApi(base);
  let populationId = params.get("population");
  if (!populationId) {
    populationId = await api.createPopulation(params.get("condition") ?? "human_machine");
  }
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const app = new App(api, root, populationId);
  await app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
