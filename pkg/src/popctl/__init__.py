"""popctl: decide and synthesize uniform controllers for agent populations."""

from .nfa import GadgetSpec, Nfa, NfaError, generate, normalize_target_sink, parse_nfa, serialize_nfa
from .graphs import GraphOps
from .capacity import (
    CapacityError,
    CapacityVerdict,
    LassoPlay,
    LevelEvents,
    count_entries,
    exact_list,
    lasso_capacity,
    loop_partition,
    update_list,
)
from .support_game import (
    SupportGameResult,
    compatible_graphs,
    is_compatible,
    maximal_graph,
    post_support,
    solve_support_game,
)
from .arena import BudgetExceededError, ParityArena, build_arena, solve_arena, transition_priority
from .parity import ParityGame, ParitySolution, solve_parity_game
from .synthesis import (
    Controller,
    ControllerError,
    Decision,
    controller_step,
    decide,
    deserialize_controller,
    serialize_controller,
)
from .popsim import (
    CutoffResult,
    EvenAdversary,
    OneOffAdversary,
    RandomAdversary,
    ResourceBudget,
    ResourceExceededError,
    RunOutcome,
    ScriptedAdversary,
    SimulationError,
    apply_split,
    exact_winner,
    exhaustive_verify,
    find_cutoff,
    project,
    run,
)

__all__ = [name for name in dir() if not name.startswith("_")]
