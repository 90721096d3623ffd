"""Boss/worker session loop and the three-section message protocol."""
from __future__ import annotations

import datetime as dt
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .config import AgentProfile, SessionConfig
from .crag import CragPipeline, VectorStore
from .errors import (
    ConfigInvalid,
    MalformedAgentMessage,
    MalformedBossDirective,
    MissingSection,
    OutOfOrderSections,
)
from .knowledge import KnowledgeGraph
from .tom import BeliefState, initial_belief_state, render_beliefs_block, update_belief_state

logger = logging.getLogger(__name__)

HEADERS = (("beliefs", "My Beliefs:"), ("response", "Response:"), ("future_work", "Future Work:"))
MAX_DIRECTIVE_ATTEMPTS = 3
MAX_WORKER_ATTEMPTS = 3

TEAM_SYSTEM = "You are one member of a collaborative agent team. Follow the message's instructions exactly."

FORMAT_INSTRUCTION = """\
Write your reply in exactly three sections, each introduced by its header on a line of its own, in this order:
My Beliefs:
(your understanding of the task and what you infer about your teammates' views and plans)
Response:
(your contribution for the assigned task)
Future Work:
(next steps and open challenges for the team lead)"""

DIRECTIVE_INSTRUCTION = """\
Decide the next step. Reply with one directive line, optionally preceded by a phase line:
PHASE <phase label>
ASSIGN <agent_id> :: <task for that agent>
or, when the objective is met:
CONCLUDE :: <summary of the outcome>"""

_ASSIGN_RE = re.compile(r"^\s*ASSIGN\s+(\S+)\s*::\s*(.*?)\s*$")
_CONCLUDE_RE = re.compile(r"^\s*CONCLUDE\s*::\s*(.*?)\s*$")
_PHASE_RE = re.compile(r"^\s*PHASE\s+(.+?)\s*$")


@dataclass(frozen=True)
class Message:
    turn_index: int
    agent_id: str
    kind: str  # worker_turn | boss_directive | conclusion
    beliefs: str = ""
    response: str = ""
    future_work: str = ""
    raw_text: str = ""
    phase: str = ""

    def to_record(self, timestamp: str, beliefs_sidecar: Optional[dict] = None) -> dict:
        rec = {
            "turn_index": self.turn_index,
            "agent_id": self.agent_id,
            "kind": self.kind,
            "beliefs": self.beliefs,
            "response": self.response,
            "future_work": self.future_work,
            "raw_text": self.raw_text,
            "timestamp": timestamp,
            "phase": self.phase,
        }
        if beliefs_sidecar is not None:
            rec["belief_states"] = beliefs_sidecar
        return rec


@dataclass(frozen=True)
class NextAction:
    variant: str  # assign | conclude
    assignee: str = ""
    task_statement: str = ""
    summary: str = ""
    phase: Optional[str] = None

    @classmethod
    def assign(cls, assignee, task, phase=None):
        return cls("assign", assignee=assignee, task_statement=task, phase=phase)

    @classmethod
    def conclude(cls, summary, phase=None):
        return cls("conclude", summary=summary, phase=phase)


@dataclass
class SessionState:
    config: SessionConfig
    transcript: list = field(default_factory=list)
    phase_label: str = ""
    turn_budget_remaining: int = 0

    @property
    def next_turn_index(self):
        return len(self.transcript)


@dataclass
class Transcript:
    messages: list
    end_reason: str  # concluded | budget_exhausted
    timestamps: list = field(default_factory=list)
    belief_sidecars: list = field(default_factory=list)
    beliefs: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.messages)

    def records(self) -> list[dict]:
        sidecars = self.belief_sidecars or [None] * len(self.messages)
        return [m.to_record(ts, sc) for m, ts, sc in zip(self.messages, self.timestamps, sidecars)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records())

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def read_transcript(path) -> list[Message]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(Message(d["turn_index"], d["agent_id"], d["kind"], d["beliefs"], d["response"],
                               d["future_work"], d["raw_text"], d.get("phase", "")))
    return out


# --------------------------------------------------------------------- parsing


def parse_agent_message(raw: str, agent_id: str, turn_index: int) -> Message:
    """Split a worker reply on its three header lines.

    Headers must match exactly, start their line and appear once each in the
    canonical order. Text before the first header is ignored.
    """
    if not raw or not raw.strip():
        raise MalformedAgentMessage("empty reply")
    lines = raw.splitlines()
    found = []  # (field, line number)
    for i, line in enumerate(lines):
        for name, header in HEADERS:
            if line.rstrip() == header:
                found.append((name, i))
    names = [n for n, _ in found]
    for name, _ in HEADERS:
        if name not in names:
            raise MissingSection(name)
    if names != [n for n, _ in HEADERS]:
        raise OutOfOrderSections(f"headers found in order {names}")
    bounds = [i for _, i in found] + [len(lines)]
    sections = {
        name: "\n".join(lines[bounds[j] + 1 : bounds[j + 1]]).strip()
        for j, (name, _) in enumerate(found)
    }
    return Message(turn_index, agent_id, "worker_turn", raw_text=raw, **sections)


def render_sections(beliefs: str, response: str, future_work: str) -> str:
    return f"My Beliefs:\n{beliefs}\nResponse:\n{response}\nFuture Work:\n{future_work}\n"


def parse_directive(raw: str, config: SessionConfig, current_phase: str = "") -> NextAction:
    """Read the first ASSIGN/CONCLUDE line of a boss reply.

    A ``PHASE <label>`` line before it moves the session phase; labels must be
    declared and may not move backwards. Raises ValueError with a message
    suitable for re-prompting.
    """
    phase = None
    labels = config.phase_labels
    for line in raw.splitlines():
        m = _PHASE_RE.match(line)
        if m and phase is None:
            label = m.group(1)
            match = [l for l in labels if l.lower() == label.lower()]
            if not match:
                raise ValueError(f"unknown phase {label!r}; declared phases are {labels}")
            if current_phase in labels and labels.index(match[0]) < labels.index(current_phase):
                raise ValueError(f"phase cannot move back from {current_phase!r} to {match[0]!r}")
            phase = match[0]
            continue
        m = _CONCLUDE_RE.match(line)
        if m:
            return NextAction.conclude(m.group(1), phase)
        m = _ASSIGN_RE.match(line)
        if m:
            who, task = m.group(1).lower(), m.group(2)
            target = next((a for a in config.agents if who in (a.id, a.display_name.lower())), None)
            if target is None:
                raise ValueError(f"unknown agent {m.group(1)!r}; valid ids: {[a.id for a in config.workers]}")
            if target.is_boss:
                raise ValueError("the boss cannot assign a task to itself")
            if not task:
                raise ValueError("ASSIGN needs a non-empty task after '::'")
            return NextAction.assign(target.id, task, phase)
    raise ValueError("no line of the form 'ASSIGN <agent_id> :: <task>' or 'CONCLUDE :: <summary>'")


# --------------------------------------------------------------------- prompts


def render_agent_prompt(
    profile: AgentProfile,
    state: SessionState,
    task: str,
    beliefs: BeliefState,
    kb_answer: Optional[str] = None,
    rag_answer: Optional[str] = None,
    diagnostics: Optional[Counter] = None,
) -> str:
    parts = [profile.system_prompt.strip()]
    block = render_beliefs_block(beliefs, state.config.agents, diagnostics)
    parts.append("Your current beliefs:\n" + (block or "(none yet)"))
    phase = f" (phase: {state.phase_label})" if state.phase_label else ""
    parts.append(f"Task{phase}:\n{task}")
    if kb_answer:
        parts.append(f"Knowledge base:\n{kb_answer}")
    if rag_answer:
        parts.append(f"Research notes:\n{rag_answer}")
    parts.append(FORMAT_INSTRUCTION)
    return "\n\n".join(parts)


def render_boss_prompt(state: SessionState, task: str, beliefs: BeliefState, error: Optional[str] = None) -> str:
    cfg = state.config
    boss = cfg.boss
    roster = "\n".join(f"- {a.id}: {a.display_name}, {a.role_title}" for a in cfg.workers)
    parts = [boss.system_prompt.strip(), f"Overall objective:\n{task}", f"Team members you can assign:\n{roster}"]
    if cfg.phase_labels:
        parts.append(f"Phases in order: {', '.join(cfg.phase_labels)}. Current phase: {state.phase_label or 'not started'}.")
    block = render_beliefs_block(beliefs, cfg.agents)
    if block:
        parts.append("Your current beliefs:\n" + block)
    history = [m for m in state.transcript if m.kind != "conclusion"]
    if history:
        lines = []
        for m in history:
            if m.kind == "boss_directive":
                lines.append(f"[{m.turn_index}] you assigned: {m.response}")
            else:
                lines.append(f"[{m.turn_index}] {m.agent_id}: {m.response}")
        parts.append("Conversation so far:\n" + "\n".join(lines))
    last_worker = next((m for m in reversed(state.transcript) if m.kind == "worker_turn"), None)
    if last_worker is not None:
        parts.append(f"Future Work from {last_worker.agent_id}:\n{last_worker.future_work}")
    parts.append(f"Remaining turn budget: {state.turn_budget_remaining}.")
    parts.append(DIRECTIVE_INSTRUCTION)
    if error:
        parts.append(f"Your previous reply could not be used: {error}\nReply again in the exact format.")
    return "\n\n".join(parts)


def boss_next_action(gateway, state: SessionState, task: str, beliefs: Optional[BeliefState] = None,
                     max_attempts: int = MAX_DIRECTIVE_ATTEMPTS) -> tuple[NextAction, str]:
    """Ask the boss for the next directive; returns the action and the raw reply."""
    beliefs = beliefs or initial_belief_state(state.config.boss.id)
    error = None
    for _ in range(max_attempts):
        raw = gateway.ask("boss_directive", TEAM_SYSTEM, render_boss_prompt(state, task, beliefs, error))
        try:
            return parse_directive(raw, state.config, state.phase_label), raw
        except ValueError as exc:
            error = str(exc)
            logger.info("boss directive rejected: %s", error)
    raise MalformedBossDirective(max_attempts, error)


# ----------------------------------------------------------------- session loop


class FixedClock:
    """Deterministic timestamps: a fixed start advancing one second per call."""

    def __init__(self, start="2024-01-01T00:00:00+00:00"):
        self.t = dt.datetime.fromisoformat(start)

    def __call__(self) -> str:
        out = self.t.strftime("%Y-%m-%dT%H:%M:%SZ")
        self.t += dt.timedelta(seconds=1)
        return out


def utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class Session:
    """One run of the boss/worker loop with its own KB, store and belief states."""

    def __init__(self, config: SessionConfig, gateway, kb: Optional[KnowledgeGraph] = None,
                 store: Optional[VectorStore] = None, clock: Callable[[], str] = utc_now,
                 on_worker_turn: Optional[Callable[[Message], None]] = None):
        self.config = config
        self.gateway = gateway
        self.kb = kb if kb is not None else KnowledgeGraph()
        self.store = store if store is not None else VectorStore(gateway.embedder)
        self.crag = CragPipeline(gateway, self.store, config.rag_k)
        self.clock = clock
        self.on_worker_turn = on_worker_turn
        self.diagnostics: Counter = Counter()
        self.beliefs = {a.id: initial_belief_state(a.id) for a in config.agents}
        for name, texts in config.rag_collections.items():
            self.store.create(name)
            if texts:
                self.store.ingest(name, texts)

    def _emit(self, state: SessionState, transcript: Transcript, message: Message, sidecar=None):
        state.transcript.append(message)
        state.turn_budget_remaining -= 1
        transcript.messages.append(message)
        transcript.timestamps.append(self.clock())
        transcript.belief_sidecars.append(sidecar)

    def _worker_turn(self, state: SessionState, profile: AgentProfile, task: str) -> Message:
        kb_answer = rag_answer = None
        if self.config.kb_query_before_turn:
            kb_answer = self.kb.query_knowledge_base(self.gateway, task, self.config.kb_threshold).text
        if profile.rag_collection:
            rag_answer = self.crag.answer_with_crag(profile.rag_collection, task).text
        prompt = render_agent_prompt(profile, state, task, self.beliefs[profile.id], kb_answer, rag_answer,
                                     self.diagnostics)
        error = None
        for _ in range(MAX_WORKER_ATTEMPTS):
            user = prompt if error is None else f"{prompt}\n\nYour previous reply was rejected: {error}"
            raw = self.gateway.ask("worker_turn", TEAM_SYSTEM, user, temperature=self.config.temperature)
            try:
                msg = parse_agent_message(raw, profile.id, state.next_turn_index)
            except MalformedAgentMessage as exc:
                error = str(exc)
                self.diagnostics["malformed_worker_replies"] += 1
                continue
            return Message(msg.turn_index, msg.agent_id, msg.kind, msg.beliefs, msg.response,
                           msg.future_work, msg.raw_text, state.phase_label)
        raise MalformedAgentMessage(f"{profile.id} did not produce the three sections: {error}")

    def _after_worker_turn(self, message: Message):
        self.kb.add_to_kb(self.gateway, message)
        for agent in self.config.agents:
            self.beliefs[agent.id] = update_belief_state(self.gateway, self.beliefs[agent.id], message,
                                                         self.config.agents)
        if self.on_worker_turn:
            self.on_worker_turn(message)

    def run(self, task: str) -> Transcript:
        if not task.strip():
            raise ConfigInvalid("task must be non-empty")
        cfg = self.config
        state = SessionState(cfg, [], cfg.phase_labels[0] if cfg.phase_labels else "", cfg.turn_budget)
        transcript = Transcript([], "budget_exhausted")
        boss = cfg.boss
        while state.turn_budget_remaining > 0:
            action, raw = boss_next_action(self.gateway, state, task, self.beliefs[boss.id])
            if action.phase:
                state.phase_label = action.phase
            if action.variant == "conclude":
                self._emit(state, transcript, Message(state.next_turn_index, boss.id, "conclusion",
                                                      response=action.summary, raw_text=raw,
                                                      phase=state.phase_label))
                transcript.end_reason = "concluded"
                break
            self._emit(state, transcript, Message(state.next_turn_index, boss.id, "boss_directive",
                                                  response=f"{action.assignee} :: {action.task_statement}",
                                                  raw_text=raw, phase=state.phase_label))
            if state.turn_budget_remaining == 0:
                break
            worker = cfg.profile(action.assignee)
            message = self._worker_turn(state, worker, action.task_statement)
            self._after_worker_turn(message)
            sidecar = {k: v.to_dict() for k, v in sorted(self.beliefs.items())}
            self._emit(state, transcript, message, sidecar)
        transcript.beliefs = dict(self.beliefs)
        return transcript


def run_session(config: SessionConfig, task: str, gateway, **kwargs) -> Transcript:
    return Session(config, gateway, **kwargs).run(task)
