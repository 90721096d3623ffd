from .ground import DEFAULT_ATOM_CAP, ground
from .solve import (
    MAX_ENUMERATED_ATOMS,
    ExternalSolver,
    StableModelSet,
    render_model,
    render_models,
    stable_models,
)
from .syntax import (
    AspAtom,
    AspProgram,
    AspRule,
    Constant,
    Variable,
    check_safety,
    format_program,
    parse_asp,
)
from .translate import (
    NO_CONSISTENT_ANSWER,
    SolveResult,
    answer_from_models,
    nl_to_asp,
    solve_with_retry,
)


def solve_source(source: str, max_atoms: int = MAX_ENUMERATED_ATOMS) -> StableModelSet:
    """Parse, ground and solve program text."""
    return stable_models(ground(parse_asp(source)), max_atoms)
