"""Stable-model enumeration for ground normal programs.

Candidates are generated by brute force over the atoms whose truth value is
not already fixed, and each candidate ``S`` is accepted iff it equals the
least model of the Gelfond-Lifschitz reduct of the program w.r.t. ``S``.
"""
from __future__ import annotations

import itertools
import json
import shutil
import subprocess
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import AspError, UniverseTooLarge
from .syntax import AspAtom, AspProgram, AspRule, parse_asp

MAX_ENUMERATED_ATOMS = 20


@dataclass(frozen=True)
class StableModelSet:
    models: tuple = ()  # tuple of frozensets of ground AspAtom, canonical order
    atom_universe_size: int = 0

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def as_strings(self) -> list[list[str]]:
        return [sorted(str(a) for a in m) for m in self.models]


def model_key(model) -> tuple:
    return tuple(sorted(str(a) for a in model))


def canonical(models: Iterable) -> tuple:
    unique = {model_key(m): frozenset(m) for m in models}
    return tuple(unique[k] for k in sorted(unique))


def render_model(model) -> str:
    return "{" + ", ".join(model_key(model)) + "}"


def render_models(models: StableModelSet) -> str:
    """One model per line, atoms sorted and comma separated inside braces."""
    return "".join(render_model(m) + "\n" for m in models.models)


def least_model(rules: Iterable[AspRule]) -> set:
    """Least model of a positive program (negative bodies are ignored)."""
    rules = list(rules)
    model: set = set()
    changed = True
    while changed:
        changed = False
        for r in rules:
            if r.head not in model and all(a in model for a in r.positive_body):
                model.add(r.head)
                changed = True
    return model


def reduct(rules: Iterable[AspRule], candidate: set) -> list[AspRule]:
    """Gelfond-Lifschitz reduct: drop rules blocked by ``candidate``, strip ``not``."""
    return [
        AspRule(r.head, r.positive_body)
        for r in rules
        if not any(a in candidate for a in r.negative_body)
    ]


def is_stable(rules, candidate: set) -> bool:
    return least_model(reduct(rules, candidate)) == candidate


def stable_models(program: AspProgram, max_atoms: int = MAX_ENUMERATED_ATOMS) -> StableModelSet:
    """All stable models of a ground program, canonically ordered.

    Atoms not derivable even with every negative literal assumed true are false
    in all stable models, and the least model of the negation-free rules is
    contained in all of them, so only the remaining atoms are enumerated. More
    than ``max_atoms`` of those raises UniverseTooLarge.
    """
    for r in program.rules:
        if not r.is_ground:
            raise AspError(f"stable_models needs a ground program; ground it first: {r}")
    rules = list(program.rules)
    universe = program.atoms()
    possible = least_model(rules)
    rules = [r for r in rules if all(a in possible for a in r.positive_body)]
    certain = least_model(r for r in rules if not r.negative_body)
    open_atoms = sorted(possible - certain, key=str)
    if len(open_atoms) > max_atoms:
        raise UniverseTooLarge(len(open_atoms), max_atoms)

    found = []
    for n in range(len(open_atoms) + 1):
        for chosen in itertools.combinations(open_atoms, n):
            candidate = certain | set(chosen)
            if is_stable(rules, candidate):
                found.append(frozenset(candidate))
    return StableModelSet(canonical(found), len(universe))


class ExternalSolver:
    """Adapter running a clingo-compatible executable for programs too big to enumerate.

    The executable is invoked as ``<exe> --outf=2 0`` with the program on stdin
    and must print clingo's JSON output format.
    """

    def __init__(self, executable: str = "clingo", timeout: float = 60.0):
        self.executable = executable
        self.timeout = timeout

    def available(self) -> bool:
        return shutil.which(self.executable) is not None

    def solve(self, program: AspProgram) -> StableModelSet:
        try:
            proc = subprocess.run(
                [self.executable, "--outf=2", "0"],
                input=str(program), capture_output=True, text=True, timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise AspError(f"external solver failed: {exc}") from exc
        # clingo exit codes encode the result (10 sat, 20 unsat, 30 sat+exhausted)
        try:
            body = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise AspError(f"external solver output is not JSON: {proc.stderr.strip()[:200]}") from exc
        models = []
        for call in body.get("Call", []):
            for witness in call.get("Witnesses", []):
                atoms = parse_asp("".join(f"{s}.\n" for s in witness.get("Value", [])))
                models.append(frozenset(r.head for r in atoms.rules))
        return StableModelSet(canonical(models), len(program.atoms()))
