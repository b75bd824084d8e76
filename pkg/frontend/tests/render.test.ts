// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import type { CandidatesPayload } from "../src/api";
import type { ClientView } from "../src/model";
import {
  renderBanner,
  renderCandidates,
  renderGraph,
  renderMoveButtons,
  renderStrategyForm,
} from "../src/render";

function view(overrides: Partial<ClientView> = {}): ClientView {
  return {
    phase: "individual_learning",
    banner: "Learning phase",
    networkId: "abc123",
    currentNode: 1,
    moveIndex: 3,
    totalMoves: 10,
    score: 350,
    edges: [
      { target: 2, reward: 200 },
      { target: 4, reward: -50 },
    ],
    revealedNodes: [0, 1, 2, 4],
    pathEdges: [[0, 1]],
    repeatTally: 0,
    dashedHint: null,
    inputEnabled: true,
    feedback: null,
    ...overrides,
  };
}

describe("renderGraph", () => {
  it("draws only revealed nodes", () => {
    const svg = renderGraph(view());
    const drawn = [...svg.querySelectorAll("circle")].map((c) =>
      Number(c.getAttribute("data-node")),
    );
    expect(drawn.sort((a, b) => a - b)).toEqual([0, 1, 2, 4]);
  });

  it("classes edges by reward sign", () => {
    const svg = renderGraph(view());
    const offers = [...svg.querySelectorAll("line.offer")];
    expect(offers.some((l) => l.classList.contains("positive"))).toBe(true);
    expect(offers.some((l) => l.classList.contains("negative"))).toBe(true);
  });

  it("renders the dashed hint with a dash pattern", () => {
    const svg = renderGraph(view({ dashedHint: 4 }));
    const dashed = [...svg.querySelectorAll("line")].filter(
      (l) => l.getAttribute("stroke-dasharray") !== "none" &&
        l.getAttribute("stroke-dasharray") !== null,
    );
    expect(dashed.length).toBeGreaterThan(0);
  });
});

describe("renderMoveButtons", () => {
  it("offers one keyboard-reachable button per edge", () => {
    const chosen: number[] = [];
    const panel = renderMoveButtons(view(), { onMove: (t) => chosen.push(t) });
    const buttons = [...panel.querySelectorAll("button")];
    expect(buttons).toHaveLength(2);
    buttons[1].click();
    expect(chosen).toEqual([4]);
  });

  it("disables buttons when input is off", () => {
    const panel = renderMoveButtons(view({ inputEnabled: false }), {});
    for (const b of panel.querySelectorAll("button")) {
      expect(b.disabled).toBe(true);
    }
  });
});

describe("renderCandidates", () => {
  const payload: CandidatesPayload = {
    candidates: [
      { label: "A", average_score: 2650 },
      { label: "B", average_score: 2000 },
    ],
    own_average_score: 1950,
  };

  it("shows labels and integer scores with identical iconography", () => {
    const panel = renderCandidates(payload, {});
    const cards = [...panel.querySelectorAll(".candidate-card")];
    expect(cards).toHaveLength(2);
    const icons = cards.map((c) => c.querySelector(".icon")?.textContent);
    expect(new Set(icons).size).toBe(1);
    expect(panel.textContent).toContain("2650");
    expect(panel.textContent).toContain("Your average score so far: 1950");
    // nothing in the card hints at the demonstrator's kind
    expect(panel.textContent).not.toMatch(/machine|human/i);
  });

  it("selection is a button click", () => {
    const picked: string[] = [];
    const panel = renderCandidates(payload, { onSelect: (l) => picked.push(l) });
    (panel.querySelector('[data-label="A"]') as HTMLButtonElement).click();
    expect(picked).toEqual(["A"]);
  });
});

describe("renderBanner", () => {
  it("shows move counter and API score", () => {
    const bar = renderBanner(view());
    expect(bar.textContent).toContain("Move 3 of 10");
    expect(bar.textContent).toContain("Score: 350");
  });

  it("shows the repeat tally during repeat", () => {
    const bar = renderBanner(view({ phase: "repeat", repeatTally: 300 }));
    expect(bar.textContent).toContain("Repeat bonus: 300");
  });
});

describe("renderStrategyForm", () => {
  it("submits the entered text", () => {
    const texts: string[] = [];
    const form = renderStrategyForm({ onStrategy: (t) => texts.push(t) });
    const area = form.querySelector("textarea")!;
    area.value = "always take the losses first";
    form.dispatchEvent(new Event("submit"));
    expect(texts).toEqual(["always take the losses first"]);
  });

  it("caps the text length", () => {
    const form = renderStrategyForm({});
    expect(form.querySelector("textarea")!.getAttribute("maxlength")).toBe("2000");
  });
});
