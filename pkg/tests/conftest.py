import socket

import pytest

from agentteam.config import AgentProfile, SessionConfig
from agentteam.gateway import Gateway
from agentteam.scenario import bundled_script_path, load_scenario

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] AC{number:>2} {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("AC")[1].split()[0])):
            terminalreporter.write_line(line)


def small_team(turn_budget=24, phase_labels=(), collections=None, rag_for=None):
    agents = [
        AgentProfile("alex", "Alex", "Product Manager", "You lead the team.", is_boss=True),
        AgentProfile("sam", "Sam", "Market Research Analyst", "You research markets.",
                     rag_collection=(rag_for or {}).get("sam")),
        AgentProfile("jamie", "Jamie", "Product Designer", "You design products.",
                     rag_collection=(rag_for or {}).get("jamie")),
    ]
    return SessionConfig(agents=agents, turn_budget=turn_budget, phase_labels=list(phase_labels),
                         rag_collections=dict(collections or {}), kb_query_before_turn=False).validate()


def worker_reply(beliefs="b", response="r", future="f"):
    return f"My Beliefs:\n{beliefs}\nResponse:\n{response}\nFuture Work:\n{future}\n"


@pytest.fixture
def team():
    return small_team()


@pytest.fixture
def lean():
    return load_scenario()


@pytest.fixture
def lean_gateway():
    return Gateway.from_script_file(bundled_script_path())


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly on any attempt to open a socket connection."""
    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket.socket, "connect_ex", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
