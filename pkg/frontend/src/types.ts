/** Wire types mirrored from the session service's JSON bodies. */

export type LitCondition = { lit: [string, boolean] };
export type RelCondition = {
  rel: { terms: [number | string, string][]; op: "<=" | ">=" | "="; rhs: number | string };
};
export type ConditionDoc = LitCondition | RelCondition;

export type InvariantGroupDoc = { members: string[]; kind: string };

export type PlanDoc = {
  steps: string[][];
  linearization: string[];
  horizon: number;
};

export type OutcomeDoc = {
  status: "plan" | "infeasible" | "resource-limit";
  plan?: PlanDoc;
  explanations?: number[][];
  explanations_truncated?: boolean;
  detail?: string;
  nodes: number;
  horizon_lower: number;
};

export type SessionStateDoc = {
  id: string;
  round: number;
  goal: ConditionDoc[];
  constraints: ConditionDoc[];
  relaxation: string;
  invariant_groups: InvariantGroupDoc[];
  last_outcome: OutcomeDoc | null;
  explanations: number[][] | null;
};

export type CreatedDoc = {
  id: string;
  round: number;
  analysis: {
    relaxation: string;
    horizon_lower: number;
    invariant_groups: InvariantGroupDoc[];
  };
};

export type UpdateDoc =
  | { goal_change: { add: ConditionDoc[]; del: number[] } }
  | { add_constraints: ConditionDoc[] };

export type UpdateResponseDoc = { round: number; relaxation: string };
export type SolveResponseDoc = { round: number; outcome: OutcomeDoc };

export type JournalRecord = {
  round: number;
  event: "create" | "update" | "solve";
  [key: string]: unknown;
};
