"""Task planning by Petri-net reachability relaxation with an exact MILP core."""

__version__ = "0.1.0"

from .planner import (  # noqa: F401
    Plan,
    PlanOptions,
    PlanOutcome,
    PlanStatus,
    plan,
    validate_plan,
)
from .problem import (  # noqa: F401
    Action,
    BoolAssign,
    BoolLit,
    Condition,
    Diagnostic,
    Effect,
    LinCond,
    NumDelta,
    Problem,
    ProblemFormatError,
    ProblemValidationError,
    StateVariable,
    VarKind,
    parse_problem,
    serialize_problem,
    validate_problem,
)
from .session import (  # noqa: F401
    AddConstraints,
    GoalChange,
    Session,
    create_session,
    replay_journal,
)
