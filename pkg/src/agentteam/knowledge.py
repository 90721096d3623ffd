"""Triple store fed from conversation turns, with a logic-solver fallback for thin results."""
from __future__ import annotations

import json
import logging
import re
import threading
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from .asp import answer_from_models, solve_with_retry
from .errors import AllSlotsUnbound, AspError, TranslationFailed

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 2
INSUFFICIENT_KNOWLEDGE = "insufficient knowledge to answer this question"
WILDCARDS = frozenset({"", "*", "?", "_"})

EXTRACT_SYSTEM = "You extract facts from team conversation as subject | predicate | object lines."
PATTERN_SYSTEM = "You map questions onto triple patterns for a knowledge graph."


def normalize_token(text: str) -> str:
    """Lowercase, trim, and join internal whitespace with underscores."""
    return re.sub(r"\s+", "_", text.strip().lower())


@dataclass(frozen=True)
class KnowledgeTriple:
    subject: str
    predicate: str
    object: str
    source_turn: int = 0
    source_agent: str = ""

    @property
    def key(self):
        return (self.subject, self.predicate, self.object)

    @property
    def sort_key(self):
        return (self.source_turn, self.subject, self.predicate, self.object)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TriplePattern:
    subject: Optional[str] = None
    predicate: Optional[str] = None
    object: Optional[str] = None

    def __post_init__(self):
        for slot in ("subject", "predicate", "object"):
            value = getattr(self, slot)
            if value is not None:
                value = normalize_token(value)
                object.__setattr__(self, slot, None if value in WILDCARDS else value)

    @property
    def unbound(self):
        return self.subject is None and self.predicate is None and self.object is None

    def matches(self, t: KnowledgeTriple) -> bool:
        return (
            (self.subject is None or self.subject == t.subject)
            and (self.predicate is None or self.predicate == t.predicate)
            and (self.object is None or self.object == t.object)
        )


@dataclass(frozen=True)
class KbAnswer:
    text: str
    source: str  # "graph" | "solver" | "unknown"
    rows_found: int
    diagnostic: str = ""


def parse_triple_line(line: str) -> Optional[tuple[str, str, str]]:
    parts = line.split("|")
    if len(parts) != 3:
        return None
    s, p, o = (normalize_token(x) for x in parts)
    if not (s and p and o):
        return None
    return s, p, o


def parse_pattern(text: str) -> Optional[TriplePattern]:
    """First ``subject | predicate | object`` line of ``text``; ``*`` marks a wildcard."""
    for line in text.splitlines():
        parts = line.split("|")
        if len(parts) == 3:
            return TriplePattern(*parts)
    return None


class KnowledgeGraph:
    """In-memory triple store.

    Writes are serialised with a lock and each ``add_to_kb`` batch is applied
    atomically; reads see a consistent snapshot.
    """

    def __init__(self, triples=()):
        self._triples: list[KnowledgeTriple] = []
        self._keys: set = set()
        self._lock = threading.RLock()
        self.diagnostics: Counter = Counter()
        self.solver_invocations = 0
        self.insert(triples)

    def __len__(self):
        return len(self._triples)

    def __iter__(self):
        with self._lock:
            return iter(list(self._triples))

    def insert(self, triples) -> list[KnowledgeTriple]:
        """Insert triples not already present (by subject/predicate/object)."""
        added = []
        with self._lock:
            for t in triples:
                if t.key in self._keys:
                    continue
                self._keys.add(t.key)
                self._triples.append(t)
                added.append(t)
        return added

    def add_to_kb(self, gateway, message) -> list[KnowledgeTriple]:
        """Extract triples from a worker turn and store the new ones."""
        if message.kind != "worker_turn":
            raise ValueError("add_to_kb only ingests worker turns")
        prompt = (
            f"Message from {message.agent_id} (turn {message.turn_index}):\n"
            f"{message.response}\n\n"
            f"Planned next steps:\n{message.future_work}\n\n"
            "List the concrete facts stated above, one per line, as\n"
            "subject | predicate | object\n"
            "Use short noun phrases. Output nothing else."
        )
        raw = gateway.ask("extract_triples", EXTRACT_SYSTEM, prompt, temperature=0.0)
        batch = []
        for line in raw.splitlines():
            if not line.strip():
                continue
            parsed = parse_triple_line(line)
            if parsed is None:
                self.diagnostics["unparseable_extraction_lines"] += 1
                logger.debug("skipping extraction line %r", line)
                continue
            batch.append(KnowledgeTriple(*parsed, source_turn=message.turn_index, source_agent=message.agent_id))
        return self.insert(batch)

    def graph_select(self, pattern: TriplePattern) -> list[KnowledgeTriple]:
        if pattern.unbound:
            raise AllSlotsUnbound("at least one of subject, predicate, object must be bound")
        with self._lock:
            rows = [t for t in self._triples if pattern.matches(t)]
        return sorted(rows, key=lambda t: t.sort_key)

    def query_knowledge_base(self, gateway, question: str, threshold: int = DEFAULT_THRESHOLD) -> KbAnswer:
        """Answer from the graph when it holds at least ``threshold`` matching rows,
        otherwise hand the rows and question to the logic solver."""
        if not question.strip():
            raise ValueError("question must be non-empty")
        if threshold < 1:
            raise ValueError("threshold must be positive")
        prompt = (
            f"Question: {question}\n\n"
            "Give one line `subject | predicate | object` selecting the facts that answer it."
            " Use * for any slot you cannot fix. Lowercase tokens, underscores for spaces."
        )
        pattern = parse_pattern(gateway.ask("nl_to_pattern", PATTERN_SYSTEM, prompt, temperature=0.0))
        if pattern is None or pattern.unbound:
            self.diagnostics["unusable_patterns"] += 1
            rows = []
        else:
            rows = self.graph_select(pattern)

        if len(rows) >= threshold:
            listing = "\n".join(f"{t.subject} | {t.predicate} | {t.object}" for t in rows)
            text = gateway.ask(
                "rows_to_nl",
                "You answer questions from knowledge-graph rows.",
                f"Question: {question}\n\nRows:\n{listing}\n\nAnswer using only these rows.",
                temperature=0.0,
            )
            return KbAnswer(text, "graph", len(rows))

        self.solver_invocations += 1
        try:
            result = solve_with_retry(gateway, question, rows)
        except TranslationFailed as exc:
            return KbAnswer(INSUFFICIENT_KNOWLEDGE, "unknown", len(rows), diagnostic=str(exc))
        except AspError as exc:
            self.diagnostics["solver_errors"] += 1
            return KbAnswer(INSUFFICIENT_KNOWLEDGE, "unknown", len(rows), diagnostic=str(exc))
        if not result.models.models:
            return KbAnswer(INSUFFICIENT_KNOWLEDGE, "unknown", len(rows), diagnostic="no stable models")
        text = answer_from_models(gateway, result.models, question)
        return KbAnswer(text, "solver", len(rows), diagnostic=f"attempts={result.attempts}")

    # persistence

    def dump(self, path) -> None:
        with self._lock:
            lines = [json.dumps(t.to_dict(), sort_keys=True) for t in self._triples]
        Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    def dumps(self) -> str:
        with self._lock:
            return "".join(json.dumps(t.to_dict(), sort_keys=True) + "\n" for t in self._triples)

    @classmethod
    def load(cls, path) -> "KnowledgeGraph":
        kg = cls()
        p = Path(path)
        if not p.exists():
            return kg
        triples = []
        for line in p.read_text(encoding="utf-8").splitlines():
            if line.strip():
                d = json.loads(line)
                triples.append(KnowledgeTriple(d["subject"], d["predicate"], d["object"],
                                               int(d["source_turn"]), d["source_agent"]))
        kg.insert(triples)
        return kg
