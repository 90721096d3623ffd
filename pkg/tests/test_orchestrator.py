import json

import pytest
from hypothesis import given, settings, strategies as st

from agentteam.errors import (
    ConfigInvalid,
    MalformedAgentMessage,
    MalformedBossDirective,
    MissingSection,
    OutOfOrderSections,
    ScriptExhausted,
)
from agentteam.gateway import Gateway
from agentteam.knowledge import KnowledgeGraph
from agentteam.orchestrator import (
    FixedClock,
    NextAction,
    Session,
    SessionState,
    parse_agent_message,
    parse_directive,
    read_transcript,
    render_agent_prompt,
    render_boss_prompt,
    render_sections,
)
from agentteam.tom import BeliefState, InferredBelief

from conftest import small_team, worker_reply


def worker_turn_entries(n_agents=3, reply=None):
    return [("worker_turn", reply or worker_reply()), ("extract_triples", "a | b | c")] + [
        ("update_beliefs", f"note {i}") for i in range(n_agents)
    ]


def session_script(assignees, conclude=True):
    entries = []
    for who in assignees:
        entries.append(("boss_directive", f"ASSIGN {who} :: do part {who}"))
        entries += worker_turn_entries()
    if conclude:
        entries.append(("boss_directive", "CONCLUDE :: all done"))
    return entries


# ---------------------------------------------------------------- messages


def test_parse_three_sections():
    raw = "preamble\nMy Beliefs:\nB1\nB2\nResponse:\nR\nFuture Work:\nF\n"
    m = parse_agent_message(raw, "sam", 3)
    assert (m.beliefs, m.response, m.future_work) == ("B1\nB2", "R", "F")
    assert (m.agent_id, m.turn_index, m.kind, m.raw_text) == ("sam", 3, "worker_turn", raw)


def test_missing_and_out_of_order_sections():
    with pytest.raises(MissingSection) as exc:
        parse_agent_message("My Beliefs:\nb\nResponse:\nr\n", "sam", 0)
    assert exc.value.name == "future_work"
    with pytest.raises(OutOfOrderSections):
        parse_agent_message("Response:\nr\nMy Beliefs:\nb\nFuture Work:\nf\n", "sam", 0)
    with pytest.raises(OutOfOrderSections):
        parse_agent_message(worker_reply() + "Response:\nagain\n", "sam", 0)
    # a header must sit on its own line
    with pytest.raises(MissingSection):
        parse_agent_message("My Beliefs: b\nResponse:\nr\nFuture Work:\nf", "sam", 0)


# str.splitlines also breaks on these, so keep them out of section bodies
LINE_BREAKS = "\r\x0b\x0c\x1c\x1d\x1e\x85\u2028\u2029"
section_text = (
    st.text(alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters=LINE_BREAKS), max_size=40)
    .map(str.strip)
    .filter(lambda s: all(line.rstrip() not in ("My Beliefs:", "Response:", "Future Work:") for line in s.split("\n")))
)


@settings(max_examples=200)
@given(section_text, section_text, section_text)
def test_render_then_parse_round_trip(b, r, f):
    m = parse_agent_message(render_sections(b, r, f), "sam", 1)
    assert (m.beliefs, m.response, m.future_work) == (b, r, f)


def test_parse_directive_variants(team):
    assert parse_directive("ASSIGN sam :: size the market", team) == NextAction.assign("sam", "size the market")
    assert parse_directive("Let me see.\nASSIGN Jamie :: sketch", team) == NextAction.assign("jamie", "sketch")
    assert parse_directive("CONCLUDE :: shipped", team) == NextAction.conclude("shipped")
    for bad in ("ASSIGN zoe :: x", "ASSIGN alex :: x", "ASSIGN sam ::   ", "let's go", "assign sam :: x"):
        with pytest.raises(ValueError):
            parse_directive(bad, team)


def test_parse_directive_phases():
    cfg = small_team(phase_labels=["Build", "Measure", "Learn"])
    a = parse_directive("PHASE measure\nASSIGN sam :: x", cfg, "Build")
    assert a.phase == "Measure"
    with pytest.raises(ValueError, match="back"):
        parse_directive("PHASE Build\nASSIGN sam :: x", cfg, "Measure")
    with pytest.raises(ValueError, match="unknown phase"):
        parse_directive("PHASE Ship\nCONCLUDE :: x", cfg, "Build")


# ----------------------------------------------------------------- prompts


def test_agent_prompt_layout(team):
    state = SessionState(team, [], "Build", 10)
    beliefs = BeliefState("sam", "my notes", {"jamie": InferredBelief("designs", 1)})
    p = render_agent_prompt(team.profile("sam"), state, "size it", beliefs, "KB says", "RAG says")
    order = ["You research markets.", "About my work: my notes", "About Jamie: designs",
             "Task (phase: Build):\nsize it", "Knowledge base:\nKB says", "Research notes:\nRAG says", "My Beliefs:"]
    positions = [p.index(s) for s in order]
    assert positions == sorted(positions)


def test_boss_prompt_includes_latest_future_work(team):
    gw = Gateway.scripted(session_script(["sam"], conclude=False) + [("boss_directive", "CONCLUDE :: ok")])
    gw.chat.script[1] = ("worker_turn", worker_reply(future="Validate pricing with 5 users"))
    Session(team, gw, clock=FixedClock()).run("launch")
    last_boss_prompt = [r for r in gw.chat.requests if r.tag == "boss_directive"][-1].user
    assert "Future Work from sam:\nValidate pricing with 5 users" in last_boss_prompt


# ----------------------------------------------------------------- session


def test_single_assignment_session(team):
    gw = Gateway.scripted(session_script(["sam"]))
    t = Session(team, gw, clock=FixedClock()).run("launch")
    assert [(m.agent_id, m.kind) for m in t.messages] == [
        ("alex", "boss_directive"), ("sam", "worker_turn"), ("alex", "conclusion")]
    assert [m.turn_index for m in t.messages] == [0, 1, 2]
    assert t.end_reason == "concluded"
    assert t.timestamps == ["2024-01-01T00:00:00Z", "2024-01-01T00:00:01Z", "2024-01-01T00:00:02Z"]
    assert gw.chat.remaining() == 0


def test_budget_one_with_conclude(team):
    cfg = small_team(turn_budget=1)
    gw = Gateway.scripted([("boss_directive", "CONCLUDE :: nothing to do")])
    t = Session(cfg, gw).run("x")
    assert len(t) == 1 and t.end_reason == "concluded"


def test_budget_exhaustion_stops_between_turns():
    cfg = small_team(turn_budget=4)
    gw = Gateway.scripted(session_script(["sam", "jamie", "sam"], conclude=False))
    t = Session(cfg, gw).run("x")
    assert len(t) == 4
    assert t.end_reason == "budget_exhausted"
    assert [m.kind for m in t.messages] == ["boss_directive", "worker_turn"] * 2


def test_budget_exhausted_after_directive():
    cfg = small_team(turn_budget=3)
    gw = Gateway.scripted(session_script(["sam", "jamie"], conclude=False))
    t = Session(cfg, gw).run("x")
    assert [m.kind for m in t.messages] == ["boss_directive", "worker_turn", "boss_directive"]
    assert t.end_reason == "budget_exhausted"
    assert gw.calls["worker_turn"] == 1


def test_malformed_boss_directive_after_three_tries(team):
    gw = Gateway.scripted([("boss_directive", "hmm")] * 3)
    with pytest.raises(MalformedBossDirective) as exc:
        Session(team, gw).run("x")
    assert exc.value.attempts == 3


def test_boss_recovers_on_retry_with_error_feedback(team):
    gw = Gateway.scripted([("boss_directive", "ASSIGN bob :: x")] + session_script(["sam"]))
    t = Session(team, gw).run("x")
    assert len(t) == 3
    second = [r for r in gw.chat.requests if r.tag == "boss_directive"][1].user
    assert "unknown agent 'bob'" in second


def test_worker_retries_then_fails(team):
    gw = Gateway.scripted([("boss_directive", "ASSIGN sam :: x")] + [("worker_turn", "no sections")] * 3)
    with pytest.raises(MalformedAgentMessage):
        Session(team, gw).run("x")


def test_worker_recovers_on_second_reply(team):
    entries = [("boss_directive", "ASSIGN sam :: x"), ("worker_turn", "bad")] + worker_turn_entries()
    entries.append(("boss_directive", "CONCLUDE :: ok"))
    s = Session(team, Gateway.scripted(entries))
    t = s.run("x")
    assert t.messages[1].response == "r"
    assert s.diagnostics["malformed_worker_replies"] == 1


def test_hooks_run_once_per_worker_turn(team):
    class CountingKB(KnowledgeGraph):
        calls = 0

        def add_to_kb(self, gateway, message):
            CountingKB.calls += 1
            return super().add_to_kb(gateway, message)

    seen = []
    gw = Gateway.scripted(session_script(["sam", "jamie", "sam"]))
    t = Session(team, gw, kb=CountingKB(), on_worker_turn=seen.append).run("x")
    workers = [m for m in t.messages if m.kind == "worker_turn"]
    assert CountingKB.calls == len(workers) == 3
    assert seen == workers
    assert gw.calls["update_beliefs"] == 3 * len(team.agents)


def test_every_member_gets_belief_updates(team):
    gw = Gateway.scripted(session_script(["sam", "jamie"]))
    t = Session(team, gw).run("x")
    sam = t.beliefs["sam"]
    assert sam.self_summary and set(sam.others) == {"jamie"}
    alex = t.beliefs["alex"]
    assert set(alex.others) == {"sam", "jamie"}
    rec = t.records()[1]
    assert set(rec["belief_states"]) == {"alex", "jamie", "sam"}


def test_kb_and_rag_before_worker_turn():
    cfg = small_team(collections={"market": ["Homeowners want energy dashboards."]}, rag_for={"sam": "market"})
    cfg.kb_query_before_turn = True
    entries = [
        ("boss_directive", "ASSIGN sam :: research"),
        ("nl_to_pattern", "* | * | *"),
        ("nl_to_asp", "known(nothing)."),
        ("models_to_nl", "Nothing recorded yet."),
        ("grade_doc", "relevant"),
        ("synthesize", "Dashboards are wanted."),
    ] + worker_turn_entries() + [("boss_directive", "CONCLUDE :: done")]
    gw = Gateway.scripted(entries)
    Session(cfg, gw).run("x")
    prompt = [r for r in gw.chat.requests if r.tag == "worker_turn"][0].user
    assert "Knowledge base:\nNothing recorded yet." in prompt
    assert "Research notes:\nDashboards are wanted." in prompt
    assert gw.chat.remaining() == 0


def test_empty_task_rejected(team):
    with pytest.raises(ConfigInvalid):
        Session(team, Gateway.scripted()).run("  ")


def test_script_exhaustion_surfaces(team):
    with pytest.raises(ScriptExhausted):
        Session(team, Gateway.scripted([("boss_directive", "ASSIGN sam :: x")])).run("x")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["sam", "jamie"]), max_size=6), st.integers(1, 15), st.booleans())
def test_protocol_invariants(assignees, budget, conclude):
    cfg = small_team(turn_budget=budget)
    gw = Gateway.scripted(session_script(assignees, conclude))
    try:
        t = Session(cfg, gw, clock=FixedClock()).run("x")
    except ScriptExhausted:
        # script ran out before the budget did
        assert not conclude and 2 * len(assignees) < budget
        return
    msgs = t.messages
    assert len(msgs) <= budget
    assert [m.turn_index for m in msgs] == list(range(len(msgs)))
    for prev, cur in zip(msgs, msgs[1:]):
        if cur.kind == "worker_turn":
            assert prev.kind == "boss_directive"
            assert prev.response.startswith(cur.agent_id + " ::")
    assert all(m.kind != "conclusion" for m in msgs[:-1])
    assert (t.end_reason == "concluded") == (msgs[-1].kind == "conclusion")


# ----------------------------------------------------------- lean fixture


def test_lean_fixture_shape(lean, lean_gateway):
    t = Session(lean.config, lean_gateway, clock=FixedClock()).run(lean.seed_task)
    assert [(m.turn_index, m.agent_id, m.kind) for m in t.messages] == [
        (0, "alex", "boss_directive"), (1, "jamie", "worker_turn"),
        (2, "alex", "boss_directive"), (3, "sam", "worker_turn"),
        (4, "alex", "boss_directive"), (5, "taylor", "worker_turn"),
        (6, "alex", "conclusion"),
    ]
    labels = lean.phase_labels
    idx = [labels.index(m.phase) for m in t.messages]
    assert idx == sorted(idx)
    assert t.messages[-1].phase == "Learn"
    assert lean_gateway.search_calls == 1
    # everything except the single-shot baseline entries is consumed
    assert lean_gateway.chat.remaining() == lean_gateway.chat.remaining("single") + lean_gateway.chat.remaining("cot")


def test_transcript_jsonl_round_trip(tmp_path, lean, lean_gateway):
    t = Session(lean.config, lean_gateway, clock=FixedClock()).run(lean.seed_task)
    p = tmp_path / "t.jsonl"
    t.write_jsonl(p)
    lines = p.read_text().splitlines()
    first = json.loads(lines[0])
    assert {"turn_index", "agent_id", "kind", "beliefs", "response", "future_work", "raw_text",
            "timestamp", "phase"} <= set(first)
    assert read_transcript(p) == t.messages


def test_boss_prompt_shows_phase_and_budget():
    cfg = small_team(phase_labels=["Build", "Measure"])
    state = SessionState(cfg, [], "Build", 7)
    p = render_boss_prompt(state, "objective", BeliefState("alex"))
    assert "Current phase: Build." in p
    assert "Remaining turn budget: 7." in p
    assert "- sam: Sam, Market Research Analyst" in p
