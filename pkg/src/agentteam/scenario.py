"""Bundled scenarios and the run-mode comparison harness."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

from .config import SessionConfig, read_json
from .crag import VectorStore
from .errors import AgentTeamError, ConfigInvalid, MalformedAgentMessage, ScenarioInvalid, UnsupportedMode
from .knowledge import KnowledgeGraph
from .orchestrator import FixedClock, Message, Session, Transcript, parse_agent_message, utc_now

SINGLE_SYSTEM = "You are a helpful assistant."
COT_INSTRUCTION = "Think through the problem step by step, showing your reasoning, before giving your final answer."


class RunMode(str, Enum):
    SINGLE = "single"
    COT = "cot"
    MAS = "mas"
    # reserved; tree-of-thoughts search is not implemented
    TOT = "tot"


@dataclass
class Scenario:
    name: str
    team: list
    phase_labels: list
    seed_task: str
    rag_seed_documents: dict
    config: SessionConfig


@dataclass
class EvalRun:
    mode: str
    transcript: Transcript
    structural_metrics: dict = field(default_factory=dict)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("agentteam.data").joinpath(name)))


def bundled_scenario_path() -> Path:
    return bundled_path("lean_startup.json")


def bundled_script_path() -> Path:
    return bundled_path("lean_startup.script.jsonl")


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        cfg = SessionConfig.from_dict(doc)
    except ScenarioInvalid:
        raise
    except ConfigInvalid as exc:
        raise ScenarioInvalid(str(exc)) from None
    if not cfg.phase_labels:
        raise ScenarioInvalid("scenario.phase_labels must be non-empty")
    return Scenario(
        name=cfg.name,
        team=list(cfg.agents),
        phase_labels=list(cfg.phase_labels),
        seed_task=cfg.seed_task,
        rag_seed_documents={k: list(v) for k, v in cfg.rag_collections.items()},
        config=cfg,
    )


def load_scenario(path=None) -> Scenario:
    """Load and validate a scenario file (the bundled Lean Startup team by default)."""
    path = bundled_scenario_path() if path is None else path
    try:
        doc = read_json(path)
    except ConfigInvalid as exc:
        raise ScenarioInvalid(str(exc)) from None
    return scenario_from_dict(doc)


# ----------------------------------------------------------------- evaluation


def _well_formed(msg: Message) -> bool:
    try:
        parse_agent_message(msg.raw_text, msg.agent_id, msg.turn_index)
    except MalformedAgentMessage:
        return False
    return True


def structural_metrics(mode: str, transcript: Transcript, kb_triples_added=0, solver_invocations=0,
                       web_fallbacks=0) -> dict:
    """Counts over a transcript. The well-formed ratio is taken over content
    messages (worker turns, or the single answer in single/cot mode) and is 1.0
    when there are none."""
    msgs = transcript.messages
    if mode == RunMode.MAS.value:
        content = [m for m in msgs if m.kind == "worker_turn"]
    else:
        content = list(msgs)
    ratio = sum(_well_formed(m) for m in content) / len(content) if content else 1.0
    return {
        "message_count": len(msgs),
        "distinct_agents": len({m.agent_id for m in msgs}),
        "kb_triples_added": kb_triples_added,
        "solver_invocations": solver_invocations,
        "web_fallbacks": web_fallbacks,
        "sections_well_formed_ratio": ratio,
    }


def single_shot(gateway, mode: str, task: str, clock) -> Transcript:
    user = task if mode == RunMode.SINGLE.value else f"{task}\n\n{COT_INSTRUCTION}"
    text = gateway.ask(mode, SINGLE_SYSTEM, user)
    msg = Message(0, mode, "conclusion", response=text.strip(), raw_text=text)
    return Transcript([msg], "concluded", [clock()], [None])


def run_eval(scenario: Scenario, task: Optional[str], modes: Sequence[str], gateway,
             clock_factory: Callable[[], Callable[[], str]] = lambda: utc_now,
             data_dir=None) -> list[EvalRun]:
    """Run ``task`` once per mode and collect structural metrics.

    Each mas run gets a fresh knowledge graph and vector store.
    """
    if not modes:
        raise ValueError("at least one mode is required")
    task = task or scenario.seed_task
    if not task:
        raise ConfigInvalid("no task given and the scenario has no seed_task")
    runs = []
    for mode in modes:
        mode = RunMode(mode).value
        try:
            if mode == RunMode.TOT.value:
                raise UnsupportedMode("tree-of-thoughts mode is reserved but not implemented")
            if mode in (RunMode.SINGLE.value, RunMode.COT.value):
                searches_before = gateway.search_calls
                transcript = single_shot(gateway, mode, task, clock_factory())
                metrics = structural_metrics(mode, transcript, web_fallbacks=gateway.search_calls - searches_before)
            else:
                kb = KnowledgeGraph()
                store = VectorStore(gateway.embedder, data_dir)
                session = Session(scenario.config, gateway, kb=kb, store=store, clock=clock_factory())
                before_kb, before_search = len(kb), gateway.search_calls
                transcript = session.run(task)
                metrics = structural_metrics(
                    mode, transcript,
                    kb_triples_added=len(kb) - before_kb,
                    solver_invocations=kb.solver_invocations,
                    web_fallbacks=gateway.search_calls - before_search,
                )
        except AgentTeamError as exc:
            exc.args = (f"[mode {mode}] {exc}",)
            exc.mode = mode
            raise
        runs.append(EvalRun(mode, transcript, metrics))
    return runs


def report_dict(scenario: Scenario, task: str, runs: Sequence[EvalRun]) -> dict:
    return {
        "scenario": scenario.name,
        "task": task,
        "runs": [
            {
                "mode": r.mode,
                "end_reason": r.transcript.end_reason,
                "structural_metrics": r.structural_metrics,
                "final_answer": r.transcript.messages[-1].response if r.transcript.messages else "",
            }
            for r in runs
        ],
    }


METRIC_COLUMNS = (
    ("message_count", "messages"),
    ("distinct_agents", "agents"),
    ("kb_triples_added", "triples"),
    ("solver_invocations", "solver"),
    ("web_fallbacks", "web"),
    ("sections_well_formed_ratio", "well_formed"),
)


def report_table(runs: Sequence[EvalRun]) -> str:
    header = ["mode"] + [label for _, label in METRIC_COLUMNS]
    rows = [header]
    for r in runs:
        row = [r.mode]
        for key, _ in METRIC_COLUMNS:
            v = r.structural_metrics[key]
            row.append(f"{v:.2f}" if isinstance(v, float) else str(v))
        rows.append(row)
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report(out_dir, scenario: Scenario, task: str, runs: Sequence[EvalRun]) -> dict:
    """Write report.json, report.txt and one transcript_<mode>.jsonl per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = report_dict(scenario, task, runs)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report_table(runs), encoding="utf-8")
    for r in runs:
        r.transcript.write_jsonl(out / f"transcript_{r.mode}.jsonl")
    return report
