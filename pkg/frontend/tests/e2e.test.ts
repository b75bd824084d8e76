// End-to-end test against a live backend: generates network pools, starts
// the session server as a child process, and drives a complete generation-1
// session through the typed client and view-model layers.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi, type SessionState } from "../src/api";
import {
  FrontierTracker,
  ReplayPlayer,
  applyMoveResult,
  viewFromState,
} from "../src/model";

const REPO_ROOT = join(__dirname, "..", "..");

let workDir: string;
let server: ChildProcess | null = null;
let base: string;
let api: SessionApi;
let populationId: string;
let seatIndex: number;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as net.AddressInfo).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

async function waitForServer(url: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      await fetch(url);
      return; // any HTTP response (even 404) means the server is up
    } catch {
      await new Promise((r) => setTimeout(r, 250));
    }
  }
  throw new Error(`server at ${url} did not come up`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "rewardnets-e2e-"));
  const poolsDir = join(workDir, "pools");
  const gen = spawnSync(
    "python3",
    ["-m", "rewardnets.cli", "gen", "--count", "300", "--out", poolsDir],
    { cwd: REPO_ROOT, encoding: "utf-8" },
  );
  if (gen.status !== 0) {
    throw new Error(`pool generation failed:\n${gen.stdout}\n${gen.stderr}`);
  }

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    [
      "-m", "rewardnets.cli", "serve",
      "--pools", poolsDir,
      "--port", String(port),
      "--data", join(workDir, "data"),
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", () => {});
  await waitForServer(`${base}/populations/none/export`);

  api = new SessionApi(base);
  populationId = await api.createPopulation("human_machine");
  await api.scriptedFill(populationId, [0]);
}, 120_000);

afterAll(() => {
  server?.kill("SIGTERM");
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

async function playWhilePhase(
  phase: string,
  chooseTarget: (state: SessionState) => number,
): Promise<void> {
  for (;;) {
    const state = await api.state();
    if (state.phase !== phase || !state.trial) return;
    await api.move(chooseTarget(state));
  }
}

describe("full generation-1 session against a live server", () => {
  it("claims the first open generation-1 seat", async () => {
    const claim = await api.claim(populationId);
    seatIndex = claim.seat_index;
    expect(claim.generation).toBe(1);
    const view = viewFromState(await api.state());
    expect(view.phase).toBe("intro");
    expect(view.inputEnabled).toBe(false);
  });

  it("plays two individual trials with scores echoed from the API", async () => {
    await api.advance(); // leave the intro screen
    for (let trial = 0; trial < 2; trial += 1) {
      let state = await api.state();
      expect(state.phase).toBe("individual_learning");
      const tracker = new FrontierTracker(state.trial!.current_node);
      let observedTotal = 0;
      for (let move = 0; move < 10; move += 1) {
        state = await api.state();
        let view = tracker.reveal(viewFromState(state));
        expect(view.inputEnabled).toBe(true);
        expect(view.score).toBe(observedTotal); // score is an API echo
        // only visited nodes plus the current frontier are revealed
        const frontier = state.trial!.edges.map((e) => e.target);
        for (const node of view.revealedNodes) {
          expect(
            frontier.includes(node) || view.pathEdges.flat().includes(node) ||
              node === state.trial!.current_node,
          ).toBe(true);
        }
        const best = state.trial!.edges.reduce((a, b) =>
          b.reward > a.reward ? b : a,
        );
        const result = await api.move(best.target);
        tracker.advance(best.target);
        view = applyMoveResult(view, result);
        observedTotal += result.reward!;
        expect(view.score).toBe(observedTotal);
      }
    }
    const state = await api.state();
    expect(state.phase).toBe("strategy_entry");
  });

  it("collects the pre-observation strategy text", async () => {
    await api.strategy("keep moving to wherever pays the most");
    expect((await api.state()).phase).toBe("demonstrator_selection");
  });

  it("offers five anonymous candidates and accepts a selection", async () => {
    const payload = await api.candidates();
    expect(payload.candidates).toHaveLength(5);
    for (const card of payload.candidates) {
      expect(Object.keys(card).sort()).toEqual(["average_score", "label"]);
      expect(Number.isInteger(card.average_score)).toBe(true);
    }
    const best = payload.candidates.reduce((a, b) =>
      b.average_score > a.average_score ? b : a,
    );
    const state = await api.select(best.label);
    expect(state.phase).toBe("observe");
  });

  it("runs four observe/repeat/try cycles with ±100 repeat feedback", async () => {
    for (let cycle = 0; cycle < 4; cycle += 1) {
      // observe: replay the demonstrator's trajectory step by step
      let state = await api.state();
      expect(state.phase).toBe("observe");
      const replay = await api.replay();
      expect(replay.moves).toHaveLength(10);
      const player = new ReplayPlayer(replay, state.trial!.current_node);
      expect(player.stepMs).toBeGreaterThan(0);
      let frame = player.frame();
      expect(frame.score).toBe(0);
      while (!frame.finished) frame = player.tick();
      expect(frame.score).toBe(replay.total);
      await api.advance();

      // repeat: reproduce the moves; on the first cycle make one deliberate
      // mistake to exercise the -100 feedback and forced correction
      state = await api.state();
      expect(state.phase).toBe("repeat");
      for (let move = 0; move < 10; move += 1) {
        state = await api.state();
        const correct = replay.moves[state.trial!.move_index];
        const wrong = state.trial!.edges.find((e) => e.target !== correct);
        if (cycle === 0 && move === 0 && wrong) {
          const miss = await api.move(wrong.target);
          expect(miss.score).toBe(-100);
          expect(miss.correct_move).toBe(correct);
          const view = applyMoveResult(viewFromState(await api.state()), miss);
          expect(view.feedback).toBe("-100");
          expect(view.dashedHint).toBe(correct); // dashed correction hint
          const fixed = await api.move(correct); // forced enactment, 0 points
          expect(fixed.score).toBe(0);
        } else {
          const hit = await api.move(correct);
          expect(hit.score).toBe(100);
        }
      }

      // try: solve the same network unaided (here: replay from memory)
      state = await api.state();
      expect(state.phase).toBe("try_self");
      await playWhilePhase("try_self", (s) => replay.moves[s.trial!.move_index]);
    }
    const state = await api.state();
    // 39 matches (+100), one miss (-100), one forced correction (0)
    expect(state.repeat_tally).toBe(3800);
    expect(state.phase).toBe("strategy_entry");
  });

  it("collects the post-observation strategy text", async () => {
    await api.strategy("take the early losses, then the big gains repeat");
    expect((await api.state()).phase).toBe("demonstration");
  });

  it("records four demonstrations and finishes the session", async () => {
    expect((await api.state()).phase).toBe("demonstration");
    await playWhilePhase("demonstration", (s) =>
      s.trial!.edges.reduce((a, b) => (b.reward > a.reward ? b : a)).target,
    );
    expect((await api.state()).phase).toBe("done");
  });

  it("exports all 14 trial records over 10 networks with correct phase tags", async () => {
    const rows = await api.exportRows(populationId);
    const mine = rows.filter(
      (r) => r.type === "trial" && r.generation === 1 && r.seat_index === seatIndex,
    );
    const phases = mine.map((r) => r.phase as string);
    const count = (p: string) => phases.filter((x) => x === p).length;
    expect(count("individual")).toBe(2);
    expect(count("repeat")).toBe(4);
    expect(count("try_self")).toBe(4);
    expect(count("demonstration")).toBe(4);
    expect(mine).toHaveLength(14);
    // repeat and try_self share networks: 2 + 4 + 4 distinct networks total
    const networks = new Set(mine.map((r) => r.network_id as string));
    expect(networks.size).toBe(10);
    const texts = rows.filter(
      (r) => r.type === "strategy" && r.generation === 1 && r.seat_index === seatIndex,
    );
    expect(texts.map((r) => r.key).sort()).toEqual(["post", "pre"]);
    expect(texts.every((r) => (r.text as string).length > 0)).toBe(true);
  });

  it("restores the exact view after a mid-session reload", async () => {
    // second generation-1 seat: stop mid-trial, then reconnect with the token
    const fresh = new SessionApi(base);
    const claim = await fresh.claim(populationId);
    expect(claim.generation).toBe(1);
    await fresh.advance();
    for (let move = 0; move < 4; move += 1) {
      const state = await fresh.state();
      await fresh.move(state.trial!.edges[0].target);
    }
    const before = await fresh.state();

    const reconnected = new SessionApi(base, claim.session_token);
    const after = await reconnected.state();
    expect(after).toEqual(before);
    expect(viewFromState(after)).toEqual(viewFromState(before));
    expect(after.trial!.move_index).toBe(4);
  });
});
