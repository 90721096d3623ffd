"""LLM translation between questions and logic programs, with validation retries."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from ..errors import AspSyntaxError, SafetyViolation, TranslationFailed
from .ground import DEFAULT_ATOM_CAP, ground
from .solve import MAX_ENUMERATED_ATOMS, StableModelSet, render_models, stable_models
from .syntax import AspProgram, parse_asp

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
NO_CONSISTENT_ANSWER = "no consistent answer"

TRANSLATOR_SYSTEM = "You translate questions into answer set programs. Output only program text."

GRAMMAR_HELP = """\
Write a normal logic program in this exact syntax:
  fact.                          e.g.  task(implementfeaturex).
  head :- lit1, ..., litn.       e.g.  completed(X) :- task(X), assigned(X,alice).
A literal is an atom or `not atom`. Predicates and constants are lowercase
(letters, digits, underscores); variables start with an uppercase letter.
Every variable in a rule head or after `not` must also appear in a positive
body literal of the same rule. `%` starts a comment. No choice rules,
aggregates, arithmetic, constraints without heads, or function symbols."""


def render_triple_fact(triple) -> str:
    return f"{triple.predicate}({triple.subject},{triple.object})."


def build_translation_prompt(question: str, context_triples: Sequence, error: Optional[str] = None) -> str:
    facts = "\n".join(render_triple_fact(t) for t in context_triples)
    parts = [
        f"Question: {question}",
        "Known facts from the team knowledge base:",
        facts if facts else "(none)",
        GRAMMAR_HELP,
        "Encode the known facts and whatever rules are needed so that the answer to"
        " the question can be read off the program's stable models.",
    ]
    if error:
        parts.append(f"Your previous program was rejected: {error}\nFix it and output the whole corrected program.")
    return "\n\n".join(parts)


def nl_to_asp(gateway, question: str, context_triples: Sequence = (), error: Optional[str] = None) -> str:
    """One ``nl_to_asp`` completion; the candidate is returned unvalidated."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    prompt = build_translation_prompt(question, context_triples, error)
    return gateway.ask("nl_to_asp", TRANSLATOR_SYSTEM, prompt, temperature=0.0)


@dataclass(frozen=True)
class SolveResult:
    models: StableModelSet
    attempts: int
    program: AspProgram


def solve_with_retry(
    gateway,
    question: str,
    context: Sequence = (),
    max_attempts: int = MAX_ATTEMPTS,
    ground_cap: int = DEFAULT_ATOM_CAP,
    max_atoms: int = MAX_ENUMERATED_ATOMS,
) -> SolveResult:
    """Translate, validate and solve, feeding parse/safety errors back on failure.

    Grounding and enumeration limits are not retried; they propagate.
    """
    error = None
    for attempt in range(1, max_attempts + 1):
        source = nl_to_asp(gateway, question, context, error)
        try:
            program = parse_asp(source)
        except (AspSyntaxError, SafetyViolation) as exc:
            error = str(exc)
            logger.info("translation attempt %d rejected: %s", attempt, error)
            continue
        models = stable_models(ground(program, ground_cap), max_atoms)
        return SolveResult(models, attempt, program)
    raise TranslationFailed(max_attempts, error)


def answer_from_models(gateway, models: StableModelSet, question: str) -> str:
    """Phrase the model set as an answer to ``question``.

    An empty model set yields the fixed text ``"no consistent answer"`` without
    consulting the LLM.
    """
    if not models.models:
        return NO_CONSISTENT_ANSWER
    rendering = render_models(models)
    prompt = (
        f"Question: {question}\n\n"
        f"The logic solver found {len(models)} stable model(s), one per line:\n{rendering}\n"
        "Answer the question in plain language using only what these models contain."
        " If the models disagree, say so."
    )
    return gateway.ask("models_to_nl", "You explain logic solver results.", prompt, temperature=0.0)
