/** Console wiring: one session per page, every state change round-trips. */

import { ApiClient, ApiError } from "./api.js";
import {
  buildView,
  conditionFromForm,
  countersProblem,
  SessionView,
} from "./model.js";
import {
  renderConstraints,
  renderError,
  renderExplanations,
  renderGoals,
  renderInvariants,
  renderPlan,
  renderStatus,
  renderTimeline,
} from "./render.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let api: ApiClient | null = null;
let sessionId: string | null = null;

async function refresh(): Promise<void> {
  if (!api || !sessionId) return;
  const [state, journal] = await Promise.all([
    api.getSession(sessionId),
    api.journal(sessionId),
  ]);
  const view = buildView(state, journal);
  paint(view);
}

function paint(view: SessionView): void {
  renderStatus(view, byId("status"));
  renderGoals(view, byId("goals"), (index) => {
    void withErrors(async () => {
      await api!.applyUpdate(sessionId!, {
        goal_change: { add: [], del: [index] },
      });
      await refresh();
    });
  });
  renderExplanations(view, byId("explanations"));
  renderPlan(view, byId("plan"));
  renderConstraints(view, byId("constraints"));
  renderInvariants(view, byId("invariants"));
  renderTimeline(view, byId("timeline"));
}

async function withErrors(action: () => Promise<void>): Promise<void> {
  try {
    await action();
    renderError(null, byId("error"));
  } catch (err) {
    const message = err instanceof ApiError
      ? `${err.status}: ${err.message}`
      : String(err);
    // Editor state survives failures: only the error banner changes.
    renderError(message, byId("error"));
  }
}

function wire(): void {
  const baseInput = byId<HTMLInputElement>("api-base");
  byId<HTMLButtonElement>("create-demo").addEventListener("click", () => {
    void withErrors(async () => {
      api = new ApiClient(baseInput.value);
      const created = await api.createSession(countersProblem(2, 3));
      sessionId = created.id;
      byId<HTMLInputElement>("session-id").value = created.id;
      await refresh();
    });
  });
  byId<HTMLButtonElement>("open-session").addEventListener("click", () => {
    void withErrors(async () => {
      api = new ApiClient(baseInput.value);
      sessionId = byId<HTMLInputElement>("session-id").value.trim();
      await refresh();
    });
  });
  byId<HTMLButtonElement>("solve").addEventListener("click", () => {
    void withErrors(async () => {
      if (!api || !sessionId) throw new Error("open a session first");
      await api.solve(sessionId);
      await refresh();
    });
  });
  byId<HTMLButtonElement>("add-goal").addEventListener("click", () => {
    void withErrors(async () => {
      if (!api || !sessionId) throw new Error("open a session first");
      const cond = conditionFromForm(
        byId<HTMLInputElement>("goal-var").value.trim(),
        byId<HTMLSelectElement>("goal-kind").value as "boolean" | "numeric",
        byId<HTMLSelectElement>("goal-op").value as any,
        byId<HTMLInputElement>("goal-value").value,
      );
      await api.applyUpdate(sessionId, { goal_change: { add: [cond], del: [] } });
      await refresh();
    });
  });
  byId<HTMLButtonElement>("add-constraint").addEventListener("click", () => {
    void withErrors(async () => {
      if (!api || !sessionId) throw new Error("open a session first");
      const cond = conditionFromForm(
        byId<HTMLInputElement>("constraint-var").value.trim(),
        "numeric",
        byId<HTMLSelectElement>("constraint-op").value as any,
        byId<HTMLInputElement>("constraint-value").value,
      );
      await api.applyUpdate(sessionId, { add_constraints: [cond] });
      await refresh();
    });
  });
}

document.addEventListener("DOMContentLoaded", wire);
