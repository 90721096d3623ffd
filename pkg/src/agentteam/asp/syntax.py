"""Terms, atoms, rules and the parser/printer for normal logic programs.

Accepted grammar::

    program  := rule*
    rule     := atom "."  |  atom ":-" literal ("," literal)* "."
    literal  := atom  |  "not" atom
    atom     := NAME  |  NAME "(" term ("," term)* ")"
    term     := NAME (constant)  |  INT (constant)  |  VAR

``NAME`` starts with a lowercase letter, ``VAR`` with an uppercase letter, and
``%`` starts a comment running to end of line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from ..errors import AspSyntaxError, SafetyViolation


@dataclass(frozen=True, order=True)
class Constant:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


Term = Union[Constant, Variable]


@dataclass(frozen=True)
class AspAtom:
    predicate: str
    terms: tuple = ()

    def __str__(self):
        if not self.terms:
            return self.predicate
        return f"{self.predicate}({','.join(str(t) for t in self.terms)})"

    def __lt__(self, other):
        return str(self) < str(other)

    @property
    def arity(self):
        return len(self.terms)

    @property
    def variables(self) -> set:
        return {t for t in self.terms if isinstance(t, Variable)}

    @property
    def is_ground(self):
        return all(isinstance(t, Constant) for t in self.terms)


@dataclass(frozen=True)
class AspRule:
    head: AspAtom
    positive_body: tuple = ()
    negative_body: tuple = ()

    @property
    def is_fact(self):
        return not self.positive_body and not self.negative_body and self.head.is_ground

    @property
    def variables(self) -> set:
        out = set(self.head.variables)
        for a in self.positive_body + self.negative_body:
            out |= a.variables
        return out

    @property
    def is_ground(self):
        return not self.variables

    def atoms(self) -> Iterator[AspAtom]:
        yield self.head
        yield from self.positive_body
        yield from self.negative_body

    def __str__(self):
        if not self.positive_body and not self.negative_body:
            return f"{self.head}."
        lits = [str(a) for a in self.positive_body] + [f"not {a}" for a in self.negative_body]
        return f"{self.head} :- {', '.join(lits)}."


@dataclass(frozen=True)
class AspProgram:
    rules: tuple = ()

    def __str__(self):
        return "".join(f"{r}\n" for r in self.rules)

    def __len__(self):
        return len(self.rules)

    def atoms(self) -> set:
        return {a for r in self.rules for a in r.atoms()}

    def constants(self) -> set:
        return {t for a in self.atoms() for t in a.terms if isinstance(t, Constant)}


def format_program(program: AspProgram) -> str:
    """Canonical text: one rule per line, positive literals before negated ones."""
    return str(program)


# ----------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<if>:-)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<dot>\.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int

    def describe(self):
        if self.kind == "eof":
            return "end of input"
        if self.kind == "bad":
            return f"unexpected character {self.text!r}"
        return f"{self.text!r}"


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            # reported by the parser when it reaches this point
            toks.append(_Tok("bad", source[pos], line, col))
            pos += 1
            continue
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "name" and text == "not":
                kind = "not"
            toks.append(_Tok(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    toks.append(_Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, source):
        self.toks = _tokenize(source)
        self.i = 0
        self.arity: dict[str, tuple[int, int, int]] = {}

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected, tok=None):
        tok = tok or self.tok
        raise AspSyntaxError(tok.line, tok.col, f"expected {expected}, found {tok.describe()}")

    def program(self):
        rules = []
        while self.tok.kind != "eof":
            rules.append(self.rule())
        return AspProgram(tuple(rules))

    def rule(self):
        if self.tok.kind == "if":
            raise AspSyntaxError(self.tok.line, self.tok.col,
                                 "rule without head (integrity constraints are not supported)")
        head = self.atom(context="a rule head")
        if self.tok.kind == "dot":
            self.advance()
            return AspRule(head)
        if self.tok.kind != "if":
            self.fail("'.' or ':-' after rule head")
        self.advance()
        pos, neg = [], []
        while True:
            if self.tok.kind == "not":
                self.advance()
                neg.append(self.atom(context="an atom after 'not'"))
            else:
                pos.append(self.atom(context="a body literal"))
            if self.tok.kind == "comma":
                self.advance()
                continue
            if self.tok.kind == "dot":
                self.advance()
                break
            self.fail("',' or '.' after body literal")
        return AspRule(head, tuple(pos), tuple(neg))

    def atom(self, context):
        start = self.tok
        if start.kind != "name":
            self.fail(context)
        self.advance()
        terms = []
        if self.tok.kind == "lpar":
            lpar = self.advance()
            while True:
                t = self.tok
                if t.kind == "name" or t.kind == "int":
                    terms.append(Constant(t.text))
                elif t.kind == "var":
                    terms.append(Variable(t.text))
                elif t.kind == "eof":
                    raise AspSyntaxError(lpar.line, lpar.col,
                                         "unclosed '(': expected a term, found end of input")
                else:
                    self.fail("a constant or variable term")
                self.advance()
                if self.tok.kind == "comma":
                    self.advance()
                    continue
                if self.tok.kind == "rpar":
                    self.advance()
                    break
                if self.tok.kind == "bad":
                    self.fail("',' or ')'")
                raise AspSyntaxError(
                    lpar.line, lpar.col,
                    f"unclosed '(': expected ',' or ')', found {self.tok.describe()}"
                    f" at line {self.tok.line}, column {self.tok.col}",
                )
        seen = self.arity.get(start.text)
        if seen is None:
            self.arity[start.text] = (len(terms), start.line, start.col)
        elif seen[0] != len(terms):
            raise AspSyntaxError(
                start.line, start.col,
                f"predicate {start.text} used with arity {len(terms)} but arity {seen[0]}"
                f" at line {seen[1]}, column {seen[2]}",
            )
        return AspAtom(start.text, tuple(terms))


def check_safety(program: AspProgram) -> None:
    """Raise SafetyViolation for the first rule with an unbound variable."""
    for index, rule in enumerate(program.rules):
        bound = set()
        for a in rule.positive_body:
            bound |= a.variables
        # report variables in reading order: head first, then negative body
        for a in (rule.head,) + tuple(rule.negative_body):
            for t in a.terms:
                if isinstance(t, Variable) and t not in bound:
                    raise SafetyViolation(index, t.name)


def parse_asp(source: str) -> AspProgram:
    """Parse and safety-check ``source``."""
    program = _Parser(source).program()
    check_safety(program)
    return program
