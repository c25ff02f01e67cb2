/** View-model: pure derivations from API responses, no client-side planning.
 *
 * Everything the console renders is computed here from the server's own
 * documents, so a page refresh followed by GET requests reconstructs the
 * identical view.
 */

import type {
  ConditionDoc,
  JournalRecord,
  OutcomeDoc,
  SessionStateDoc,
} from "./types.js";

export type GoalChipStatus = "in-conflict" | "neutral";

export type GoalChip = {
  index: number;
  text: string;
  status: GoalChipStatus;
  conflictGroups: number[]; // indices into explanation sets
};

export type TimelineEntry = {
  round: number;
  event: string;
  badge: string; // plan | infeasible | resource-limit | update | create
  summary: string;
};

export type SessionView = {
  id: string;
  round: number;
  relaxation: string;
  goalChips: GoalChip[];
  constraints: string[];
  invariantGroups: { kind: string; members: string[] }[];
  planSteps: string[][] | null;
  planHorizon: number | null;
  explanationSets: number[][];
  timeline: TimelineEntry[];
};

export function renderCondition(cond: ConditionDoc): string {
  if ("lit" in cond) {
    const [name, polarity] = cond.lit;
    return polarity ? name : `!${name}`;
  }
  const { terms, op, rhs } = cond.rel;
  const parts = terms.map(([coeff, name]) => {
    const c = String(coeff);
    if (c === "1") return name;
    if (c === "-1") return `-${name}`;
    return `${c}*${name}`;
  });
  return `${parts.join(" + ").replace(/\+ -/g, "- ")} ${op} ${rhs}`;
}

export function buildView(
  state: SessionStateDoc,
  journal: JournalRecord[],
): SessionView {
  const explanationSets = state.explanations ?? [];
  const chips: GoalChip[] = state.goal.map((cond, index) => {
    const groups: number[] = [];
    explanationSets.forEach((set, g) => {
      if (set.includes(index)) groups.push(g);
    });
    return {
      index,
      text: renderCondition(cond),
      status: groups.length > 0 ? "in-conflict" : "neutral",
      conflictGroups: groups,
    };
  });

  const outcome = state.last_outcome;
  return {
    id: state.id,
    round: state.round,
    relaxation: state.relaxation,
    goalChips: chips,
    constraints: state.constraints.map(renderCondition),
    invariantGroups: state.invariant_groups.map((g) => ({
      kind: g.kind,
      members: g.members,
    })),
    planSteps: outcome && outcome.plan ? outcome.plan.steps : null,
    planHorizon: outcome && outcome.plan ? outcome.plan.horizon : null,
    explanationSets,
    timeline: buildTimeline(journal),
  };
}

export function buildTimeline(journal: JournalRecord[]): TimelineEntry[] {
  return journal.map((record) => {
    if (record.event === "create") {
      return {
        round: record.round,
        event: "create",
        badge: "create",
        summary: "session created",
      };
    }
    if (record.event === "update") {
      const update = record.update as Record<string, unknown>;
      const kind = update && "goal_change" in update ? "goal change" : "constraints added";
      return {
        round: record.round,
        event: "update",
        badge: "update",
        summary: `${kind} (relaxation: ${record.relaxation})`,
      };
    }
    const outcome = String(record.outcome);
    let summary = outcome;
    if (outcome === "plan") {
      summary = `plan at horizon ${record.horizon}`;
    } else if (outcome === "infeasible") {
      const sets = (record.explanations as number[][] | null) ?? [];
      summary = `infeasible: ${sets.map((s) => `{${s.join(",")}}`).join(" ")}`;
    }
    return { round: record.round, event: "solve", badge: outcome, summary };
  });
}

/** Structured goal-condition builder backing the editor form. */
export function conditionFromForm(
  variable: string,
  kind: "boolean" | "numeric",
  op: "<=" | ">=" | "=" | "true" | "false",
  value: string,
): ConditionDoc {
  if (kind === "boolean") {
    return { lit: [variable, op !== "false"] };
  }
  if (op === "true" || op === "false") {
    throw new Error("numeric conditions need a relation operator");
  }
  const trimmed = value.trim();
  if (!/^-?\d+(\/\d+)?$/.test(trimmed)) {
    throw new Error(`not a rational value: ${value}`);
  }
  const rhs = /^-?\d+$/.test(trimmed) ? Number(trimmed) : trimmed;
  return { rel: { terms: [[1, variable]], op, rhs } };
}

/** The counters problem used by the "demo session" button and the tests. */
export function countersProblem(maxVal: number, goal: number): unknown {
  return {
    vars: [{ name: "c0", kind: "integer", lower: 0, upper: maxVal }],
    actions: [
      {
        name: "inc_c0",
        pre: [{ rel: { terms: [[1, "c0"]], op: "<=", rhs: maxVal - 1 } }],
        eff: [{ add: ["c0", 1] }],
      },
      {
        name: "dec_c0",
        pre: [{ rel: { terms: [[1, "c0"]], op: ">=", rhs: 1 } }],
        eff: [{ add: ["c0", -1] }],
      },
    ],
    init: { c0: 0 },
    goal: [{ rel: { terms: [[1, "c0"]], op: "=", rhs: goal } }],
  };
}
