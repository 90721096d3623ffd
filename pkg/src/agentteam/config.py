"""Team and session configuration, loaded from one JSON document.

See ``docs/config.md`` for the schema; the machine-readable version ships as
``agentteam/data/config.schema.json``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .errors import ConfigInvalid

DEFAULT_TURN_BUDGET = 24


@dataclass(frozen=True)
class AgentProfile:
    id: str
    display_name: str
    role_title: str
    system_prompt: str
    is_boss: bool = False
    rag_collection: Optional[str] = None
    responsibilities: tuple = ()

    def to_dict(self):
        return {
            "id": self.id,
            "display_name": self.display_name,
            "role_title": self.role_title,
            "system_prompt": self.system_prompt,
            "is_boss": self.is_boss,
            "rag_collection": self.rag_collection,
            "responsibilities": list(self.responsibilities),
        }


@dataclass
class SessionConfig:
    agents: list
    turn_budget: int = DEFAULT_TURN_BUDGET
    kb_threshold: int = 2
    kb_query_before_turn: bool = True
    rag_k: int = 4
    rag_collections: dict = field(default_factory=dict)
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 60.0
    embedding_dim: int = 256
    phase_labels: list = field(default_factory=list)
    name: str = ""
    seed_task: str = ""

    @property
    def boss(self) -> AgentProfile:
        return next(a for a in self.agents if a.is_boss)

    @property
    def workers(self) -> list:
        return [a for a in self.agents if not a.is_boss]

    def profile(self, agent_id) -> AgentProfile:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def validate(self) -> "SessionConfig":
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ConfigInvalid(f"agent ids must be unique: {ids}")
        bosses = [a.id for a in self.agents if a.is_boss]
        if len(bosses) != 1:
            raise ConfigInvalid(f"exactly one agent must have is_boss=true, found {len(bosses)}")
        if not self.workers:
            raise ConfigInvalid("the team needs at least one worker")
        for a in self.agents:
            if not a.system_prompt.strip():
                raise ConfigInvalid(f"agent {a.id} has an empty system_prompt")
            if a.rag_collection and a.rag_collection not in self.rag_collections:
                raise ConfigInvalid(f"agent {a.id} uses undeclared rag collection {a.rag_collection!r}")
        if self.turn_budget < 1:
            raise ConfigInvalid("turn_budget must be at least 1")
        if self.kb_threshold < 1:
            raise ConfigInvalid("kb.threshold must be at least 1")
        if len(set(self.phase_labels)) != len(self.phase_labels):
            raise ConfigInvalid("phase labels must be distinct")
        return self

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        try:
            jsonschema.validate(doc, _schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigInvalid(f"{where}: {exc.message}") from None
        agents = [
            AgentProfile(
                id=a["id"],
                display_name=a["display_name"],
                role_title=a["role_title"],
                system_prompt=a["system_prompt"],
                is_boss=a.get("is_boss", False),
                rag_collection=a.get("rag_collection"),
                responsibilities=tuple(a.get("responsibilities", ())),
            )
            for a in doc["agents"]
        ]
        kb, rag, gw, sc = (doc.get(k, {}) for k in ("kb", "rag", "gateway", "scenario"))
        cfg = cls(
            agents=agents,
            turn_budget=doc.get("turn_budget", DEFAULT_TURN_BUDGET),
            kb_threshold=kb.get("threshold", 2),
            kb_query_before_turn=kb.get("query_before_turn", True),
            rag_k=rag.get("k", 4),
            rag_collections={k: list(v) for k, v in rag.get("collections", {}).items()},
            model=gw.get("model", "gpt-4o"),
            temperature=float(gw.get("temperature", 0.0)),
            max_tokens=gw.get("max_tokens", 1024),
            timeout=float(gw.get("timeout", 60.0)),
            embedding_dim=gw.get("embedding_dim", 256),
            phase_labels=list(sc.get("phase_labels", [])),
            name=sc.get("name", doc.get("name", "")),
            seed_task=sc.get("seed_task", ""),
        )
        return cfg.validate()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "agents": [a.to_dict() for a in self.agents],
            "turn_budget": self.turn_budget,
            "kb": {"threshold": self.kb_threshold, "query_before_turn": self.kb_query_before_turn},
            "rag": {"k": self.rag_k, "collections": self.rag_collections},
            "gateway": {"model": self.model, "temperature": self.temperature, "max_tokens": self.max_tokens,
                        "timeout": self.timeout, "embedding_dim": self.embedding_dim},
            "scenario": {"name": self.name, "phase_labels": self.phase_labels, "seed_task": self.seed_task},
        }


@lru_cache(maxsize=1)
def _schema():
    return json.loads(resources.files("agentteam.data").joinpath("config.schema.json").read_text("utf-8"))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: not valid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigInvalid(f"{path}: {exc.strerror or exc}") from None


def load_config(path) -> SessionConfig:
    return SessionConfig.from_dict(read_json(path))
