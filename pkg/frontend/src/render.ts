/** DOM rendering for the session console; all data comes from SessionView. */

import type { SessionView } from "./model.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderStatus(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  root.append(
    el("span", "badge", `session ${view.id}`),
    el("span", "badge", `round ${view.round}`),
    el("span", `badge badge-${view.relaxation}`, view.relaxation),
  );
}

export function renderGoals(
  view: SessionView,
  root: HTMLElement,
  onDelete: (index: number) => void,
): void {
  root.textContent = "";
  if (view.goalChips.length === 0) {
    root.append(el("p", "muted", "no goal conditions"));
    return;
  }
  for (const chip of view.goalChips) {
    const node = el("span", `chip ${chip.status === "in-conflict" ? "chip-conflict" : ""}`);
    node.append(el("span", "chip-index", `G${chip.index}`));
    node.append(el("span", "chip-text", chip.text));
    if (chip.conflictGroups.length > 0) {
      node.title = `in conflict set(s) ${chip.conflictGroups
        .map((g) => `#${g}`)
        .join(", ")}`;
    }
    const remove = el("button", "chip-delete", "x");
    remove.addEventListener("click", () => onDelete(chip.index));
    node.append(remove);
    root.append(node);
  }
}

export function renderExplanations(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  if (view.explanationSets.length === 0) {
    root.classList.add("hidden");
    return;
  }
  root.classList.remove("hidden");
  root.append(el("h3", undefined, "conflicting goal sets"));
  view.explanationSets.forEach((set, g) => {
    const row = el("div", "conflict-set");
    row.append(el("span", "muted", `#${g}: `));
    for (const index of set) {
      const chip = view.goalChips[index];
      row.append(el("span", "chip chip-conflict",
        chip ? `G${index} ${chip.text}` : `G${index}`));
    }
    root.append(row);
  });
}

export function renderPlan(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  if (view.planSteps === null) {
    root.append(el("p", "muted", "no plan yet"));
    return;
  }
  root.append(el("h3", undefined, `plan (horizon ${view.planHorizon})`));
  if (view.planSteps.length === 0) {
    root.append(el("p", undefined, "empty plan: the goal already holds"));
    return;
  }
  const list = el("ol", "plan-steps");
  view.planSteps.forEach((step) => {
    list.append(el("li", undefined, step.length ? step.join(", ") : "(idle)"));
  });
  root.append(list);
}

export function renderConstraints(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  if (view.constraints.length === 0) {
    root.append(el("p", "muted", "none"));
    return;
  }
  for (const text of view.constraints) {
    root.append(el("span", "chip", text));
  }
}

export function renderInvariants(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  if (view.invariantGroups.length === 0) {
    root.append(el("p", "muted", "none"));
    return;
  }
  for (const group of view.invariantGroups) {
    root.append(el("span", "chip", `${group.kind}: ${group.members.join(", ")}`));
  }
}

export function renderTimeline(view: SessionView, root: HTMLElement): void {
  root.textContent = "";
  const list = el("ul", "timeline");
  for (const entry of view.timeline) {
    const item = el("li");
    item.append(
      el("span", "muted", `r${entry.round} `),
      el("span", `badge badge-${entry.badge}`, entry.badge),
      el("span", undefined, ` ${entry.summary}`),
    );
    list.append(item);
  }
  root.append(list);
}

export function renderError(message: string | null, root: HTMLElement): void {
  root.textContent = message ?? "";
  root.classList.toggle("hidden", message === null);
}
