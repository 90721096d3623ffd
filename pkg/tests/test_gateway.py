import json
import math

import httpx
import pytest
from hypothesis import given, strategies as st

from agentteam.errors import EmptyText, GatewayFailure, ScriptExhausted, SearchUnavailable
from agentteam.gateway import (
    CompletionRequest,
    FixtureSearch,
    Gateway,
    HashEmbedder,
    RemoteChatBackend,
    RemoteSearch,
    ScriptedBackend,
    SearchResult,
    cosine,
    load_script,
)


def req(tag, user="u"):
    return CompletionRequest("sys", user, tag)


def test_scripted_backend_consumes_in_order_per_tag():
    b = ScriptedBackend([("grade_doc", "relevant"), ("synthesize", "S"), ("grade_doc", "irrelevant")])
    assert b.complete(req("grade_doc")) == "relevant"
    assert b.complete(req("grade_doc")) == "irrelevant"
    assert b.complete(req("synthesize")) == "S"
    assert b.remaining() == 0
    with pytest.raises(ScriptExhausted) as exc:
        b.complete(req("grade_doc"))
    assert exc.value.tag == "grade_doc"


def test_scripted_glob_patterns():
    b = ScriptedBackend([("*", "any"), ("grade_doc", "specific")])
    assert b.complete(req("grade_doc")) == "any"
    assert b.remaining("grade_doc") == 1
    with pytest.raises(ScriptExhausted):
        b.complete(req("synthesize"))
    assert b.complete(req("grade_doc")) == "specific"


def test_scripted_backend_records_requests():
    b = ScriptedBackend([("single", "x")])
    b.complete(req("single", "hello"))
    assert [r.user for r in b.requests] == ["hello"]


def test_completion_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("s", "u", "not_a_tag")
    with pytest.raises(ValueError):
        CompletionRequest("s", "u", "single", temperature=3.0)
    with pytest.raises(ValueError):
        CompletionRequest("s", "u", "single", max_tokens=0)


def test_gateway_counts_calls_by_tag():
    gw = Gateway.scripted([("single", "a"), ("cot", "b"), ("single", "c")])
    gw.ask("single", "s", "u")
    gw.ask("single", "s", "u")
    gw.ask("cot", "s", "u")
    assert gw.calls == {"single": 2, "cot": 1}


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_embedding_is_unit_norm_and_deterministic(text):
    e = HashEmbedder(64)
    v = e.embed(text)
    assert len(v) == 64
    assert math.isclose(math.sqrt(sum(x * x for x in v)), 1.0, rel_tol=1e-9)
    assert HashEmbedder(64).embed(text) == v


def test_embedding_case_insensitive_and_rejects_blank():
    e = HashEmbedder()
    assert e.embed("Smart Home") == e.embed("smart home")
    for blank in ("", "   ", "\n\t"):
        with pytest.raises(EmptyText):
            e.embed(blank)


def test_cosine_bounds_and_zero_vector():
    assert cosine((1.0, 0.0), (1.0, 0.0)) == 1.0
    assert cosine((1.0, 0.0), (0.0, 1.0)) == 0.0
    assert cosine((0.0, 0.0), (1.0, 0.0)) == 0.0
    assert math.isclose(cosine((1.0, 2.0), (-1.0, -2.0)), -1.0)


def test_fixture_search_truncates_and_defaults():
    r = [SearchResult(f"t{i}", "s", f"https://e.x/{i}") for i in range(5)]
    s = FixtureSearch({"q": r, "*": r[:1]})
    assert len(s.search("q", 3)) == 3
    assert s.search("other", 3) == r[:1]


def test_web_search_counts_and_unconfigured():
    gw = Gateway.scripted()
    gw.searcher = Gateway(chat=None).searcher
    with pytest.raises(SearchUnavailable):
        gw.web_search("q", 2)
    assert gw.search_calls == 1
    with pytest.raises(ValueError):
        gw.web_search("q", 0)


def test_load_script(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text(
        "# comment\n"
        + json.dumps({"tag": "single", "response": "A"}) + "\n\n"
        + json.dumps({"search": "q", "results": [{"title": "T", "snippet": "S", "url": "U"}]}) + "\n"
    )
    entries, search = load_script(p)
    assert entries == [("single", "A")]
    assert search == {"q": [SearchResult("T", "S", "U")]}
    p.write_text('{"nope": 1}\n')
    with pytest.raises(GatewayFailure):
        load_script(p)


def _remote(handler, retries=3):
    sleeps = []
    client = httpx.Client(transport=httpx.MockTransport(handler))
    backend = RemoteChatBackend("https://llm.invalid/v1", "key", client=client, retries=retries, sleep=sleeps.append)
    return backend, sleeps


def test_remote_chat_retries_transient_then_succeeds():
    calls = []

    def handler(request):
        calls.append(json.loads(request.content))
        if len(calls) < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    backend, sleeps = _remote(handler)
    assert backend.complete(req("single", "hi")) == "ok"
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]
    assert calls[0]["messages"][1] == {"role": "user", "content": "hi"}


def test_remote_chat_gives_up_after_retries():
    n = []

    def handler(request):
        n.append(1)
        return httpx.Response(429)

    backend, _ = _remote(handler)
    with pytest.raises(GatewayFailure):
        backend.complete(req("single"))
    assert len(n) == 4


def test_remote_chat_does_not_retry_client_errors():
    n = []

    def handler(request):
        n.append(1)
        return httpx.Response(401)

    backend, _ = _remote(handler)
    with pytest.raises(GatewayFailure):
        backend.complete(req("single"))
    assert len(n) == 1


def test_remote_search_maps_failures_to_unavailable():
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(500)))
    s = RemoteSearch("https://search.invalid", "k", client=client, retries=1, sleep=lambda _: None)
    with pytest.raises(SearchUnavailable):
        s.search("q", 3)


def test_remote_search_parses_results():
    body = {"results": [{"title": "T", "content": "C", "url": "U"}, {"title": "T2", "snippet": "S2", "url": "U2"}]}
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, json=body)))
    s = RemoteSearch("https://search.invalid", "k", client=client)
    assert s.search("q", 1) == [SearchResult("T", "C", "U")]


def test_from_env_requires_key():
    with pytest.raises(GatewayFailure):
        Gateway.from_env(env={})
    gw = Gateway.from_env(env={"LLM_API_KEY": "x"})
    with pytest.raises(SearchUnavailable):
        gw.web_search("q", 1)
