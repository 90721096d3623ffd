"""Naive Herbrand instantiation."""
from __future__ import annotations

import itertools

from ..errors import GroundingTooLarge
from .syntax import AspAtom, AspProgram, AspRule, Constant, Variable

DEFAULT_ATOM_CAP = 10_000


def _substitute(atom: AspAtom, binding: dict) -> AspAtom:
    if atom.is_ground:
        return atom
    return AspAtom(atom.predicate, tuple(binding[t] if isinstance(t, Variable) else t for t in atom.terms))


def instantiate(rule: AspRule, binding: dict) -> AspRule:
    return AspRule(
        _substitute(rule.head, binding),
        tuple(_substitute(a, binding) for a in rule.positive_body),
        tuple(_substitute(a, binding) for a in rule.negative_body),
    )


def estimate_ground_atoms(program: AspProgram) -> int:
    """Upper bound on distinct ground atoms: every atom occurrence times its instance count."""
    universe = len(program.constants())
    total = 0
    for rule in program.rules:
        total += sum(universe ** len(a.variables) for a in rule.atoms())
    return total


def ground(program: AspProgram, cap: int = DEFAULT_ATOM_CAP) -> AspProgram:
    """Substitute every tuple of program constants into every non-ground rule.

    Ground rules pass through unchanged, so a variable-free program is returned
    as is. Raises GroundingTooLarge when the atom estimate exceeds ``cap``.
    """
    if all(r.is_ground for r in program.rules):
        return program
    estimate = estimate_ground_atoms(program)
    if estimate > cap:
        raise GroundingTooLarge(estimate, cap)
    universe = sorted(program.constants())
    out = []
    for rule in program.rules:
        if rule.is_ground:
            out.append(rule)
            continue
        variables = sorted(rule.variables)
        for combo in itertools.product(universe, repeat=len(variables)):
            out.append(instantiate(rule, dict(zip(variables, combo))))
    grounded = AspProgram(tuple(out))
    n = len(grounded.atoms())
    if n > cap:
        raise GroundingTooLarge(n, cap)
    return grounded


__all__ = ["ground", "instantiate", "estimate_ground_atoms", "DEFAULT_ATOM_CAP", "Constant"]
