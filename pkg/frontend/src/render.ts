// DOM renderer: draws only what the view-model exposes. Move input is plain
// buttons so the whole task is keyboard operable.

import { circularLayout } from "./layout";
import type { ClientView } from "./model";
import type { CandidatesPayload } from "./api";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderHandlers {
  onMove?: (target: number) => void;
  onAdvance?: () => void;
  onSelect?: (label: string) => void;
  onStrategy?: (text: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export function renderBanner(view: ClientView): HTMLElement {
  const bar = el("header", { class: "banner", role: "status" });
  bar.appendChild(el("h2", {}, view.banner));
  const stats = el("div", { class: "stats" });
  stats.appendChild(
    el("span", { class: "moves" }, `Move ${view.moveIndex} of ${view.totalMoves}`),
  );
  stats.appendChild(el("span", { class: "score" }, `Score: ${view.score}`));
  if (view.phase === "repeat") {
    stats.appendChild(
      el("span", { class: "tally" }, `Repeat bonus: ${view.repeatTally}`),
    );
  }
  if (view.feedback) {
    const badge = el("span", { class: "feedback", role: "alert" }, view.feedback);
    stats.appendChild(badge);
  }
  bar.appendChild(stats);
  return bar;
}

export function renderGraph(view: ClientView): SVGElement {
  const svg = svgEl("svg", {
    viewBox: "0 0 600 600",
    width: "600",
    height: "600",
    role: "img",
    "aria-label": "reward network",
  });
  if (!view.networkId) return svg as SVGElement;
  const points = circularLayout(view.networkId);

  for (const [from, to] of view.pathEdges) {
    svg.appendChild(
      svgEl("line", {
        x1: `${points[from].x}`,
        y1: `${points[from].y}`,
        x2: `${points[to].x}`,
        y2: `${points[to].y}`,
        class: "edge traversed",
      }),
    );
  }
  for (const edge of view.edges) {
    const from = view.currentNode;
    if (from === null) continue;
    const cls = edge.reward < 0 ? "edge offer negative" : "edge offer positive";
    const dashed = view.dashedHint === edge.target;
    const line = svgEl("line", {
      x1: `${points[from].x}`,
      y1: `${points[from].y}`,
      x2: `${points[edge.target].x}`,
      y2: `${points[edge.target].y}`,
      class: dashed ? `${cls} dashed` : cls,
      "stroke-dasharray": dashed ? "8 6" : "none",
    });
    svg.appendChild(line);
    const mx = (points[from].x + points[edge.target].x) / 2;
    const my = (points[from].y + points[edge.target].y) / 2;
    const label = svgEl("text", { x: `${mx}`, y: `${my}`, class: "reward-label" });
    label.textContent = `${edge.reward}`;
    svg.appendChild(label);
  }
  if (view.dashedHint !== null && view.currentNode !== null) {
    const already = view.edges.some((e) => e.target === view.dashedHint);
    if (!already) {
      svg.appendChild(
        svgEl("line", {
          x1: `${points[view.currentNode].x}`,
          y1: `${points[view.currentNode].y}`,
          x2: `${points[view.dashedHint].x}`,
          y2: `${points[view.dashedHint].y}`,
          class: "edge dashed",
          "stroke-dasharray": "8 6",
        }),
      );
    }
  }
  // only uncovered nodes exist on screen
  for (const node of view.revealedNodes) {
    const group = svgEl("circle", {
      cx: `${points[node].x}`,
      cy: `${points[node].y}`,
      r: "20",
      class: node === view.currentNode ? "node current" : "node",
      "data-node": `${node}`,
    });
    svg.appendChild(group);
  }
  return svg as SVGElement;
}

export function renderMoveButtons(
  view: ClientView,
  handlers: RenderHandlers,
): HTMLElement {
  const panel = el("nav", { class: "moves-panel", "aria-label": "available moves" });
  for (const edge of view.edges) {
    const button = el(
      "button",
      { type: "button", "data-target": `${edge.target}` },
      `Go to node ${edge.target} (${edge.reward >= 0 ? "+" : ""}${edge.reward})`,
    );
    button.disabled = !view.inputEnabled;
    button.addEventListener("click", () => handlers.onMove?.(edge.target));
    panel.appendChild(button);
  }
  return panel;
}

export function renderAdvance(handlers: RenderHandlers, label: string): HTMLElement {
  const button = el("button", { type: "button", class: "advance" }, label);
  button.addEventListener("click", () => handlers.onAdvance?.());
  return button;
}

export function renderCandidates(
  payload: CandidatesPayload,
  handlers: RenderHandlers,
): HTMLElement {
  const panel = el("section", { class: "candidates" });
  if (payload.own_average_score !== null) {
    panel.appendChild(
      el(
        "p",
        { class: "own-score" },
        `Your average score so far: ${payload.own_average_score}`,
      ),
    );
  }
  const list = el("div", { class: "cards", role: "list" });
  for (const card of payload.candidates) {
    // identical iconography for every candidate; only label and score vary
    const button = el("button", {
      type: "button",
      class: "candidate-card",
      role: "listitem",
      "data-label": card.label,
    });
    button.appendChild(el("span", { class: "icon", "aria-hidden": "true" }, "●"));
    button.appendChild(el("span", { class: "label" }, `Player ${card.label}`));
    button.appendChild(el("span", { class: "avg" }, `${card.average_score}`));
    button.addEventListener("click", () => handlers.onSelect?.(card.label));
    list.appendChild(button);
  }
  panel.appendChild(list);
  return panel;
}

export const STRATEGY_CHAR_LIMIT = 2000;

export function renderStrategyForm(handlers: RenderHandlers): HTMLElement {
  const form = el("form", { class: "strategy" });
  const area = el("textarea", {
    rows: "6",
    maxlength: `${STRATEGY_CHAR_LIMIT}`,
    "aria-label": "strategy description",
  });
  const submit = el("button", { type: "submit" }, "Save strategy");
  form.appendChild(area);
  form.appendChild(submit);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    handlers.onStrategy?.(area.value);
  });
  return form;
}

export function renderError(message: string, onRetry: () => void): HTMLElement {
  const box = el("div", { class: "error", role: "alert" });
  box.appendChild(el("p", {}, message));
  const retry = el("button", { type: "button" }, "Retry");
  retry.addEventListener("click", onRetry);
  box.appendChild(retry);
  return box;
}
