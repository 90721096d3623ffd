"""Chat-completion, embedding and web-search access behind one object.

Two flavours of every provider exist: a remote one speaking the usual
provider JSON over HTTPS, and an offline one (scripted chat, hashed trigram
embedder, fixture search) that makes whole sessions replayable byte for byte.
"""
from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import math
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import httpx

from .errors import EmptyText, GatewayFailure, ScriptExhausted, SearchUnavailable

logger = logging.getLogger(__name__)

# Purpose labels a CompletionRequest may carry.
TAGS = frozenset(
    {
        "boss_directive",
        "worker_turn",
        "extract_triples",
        "nl_to_pattern",
        "rows_to_nl",
        "nl_to_asp",
        "models_to_nl",
        "grade_doc",
        "rewrite_query",
        "synthesize",
        "update_beliefs",
        "single",
        "cot",
    }
)

DEFAULT_TIMEOUT = 60.0
DEFAULT_RETRIES = 3
EMBEDDING_DIM = 256


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    tag: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.system.strip() or not self.user.strip():
            raise ValueError("system and user text must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.tag not in TAGS:
            raise ValueError(f"unknown request tag {self.tag!r}")


@dataclass(frozen=True)
class SearchResult:
    title: str
    snippet: str
    url: str

    def to_dict(self):
        return {"title": self.title, "snippet": self.snippet, "url": self.url}


# ---------------------------------------------------------------- chat backends


class ScriptedBackend:
    """Replays canned responses keyed by request tag.

    ``script`` is an ordered list of ``(tag_pattern, response)`` pairs, where the
    pattern is an fnmatch glob. A call with tag ``t`` consumes the earliest
    unconsumed entry whose pattern matches ``t``. Nothing is ever recycled.
    """

    def __init__(self, script: Iterable[tuple[str, str]] = ()):
        self.script = [(str(p), str(r)) for p, r in script]
        self._used = [False] * len(self.script)
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.requests.append(request)
            start = self._cursor.get(request.tag, 0)
            for i in range(start, len(self.script)):
                pattern, response = self.script[i]
                if not self._used[i] and fnmatch.fnmatchcase(request.tag, pattern):
                    self._used[i] = True
                    self._cursor[request.tag] = i + 1
                    return response
            self._cursor[request.tag] = len(self.script)
            raise ScriptExhausted(request.tag)

    def remaining(self, tag: Optional[str] = None) -> int:
        return sum(
            1
            for used, (pattern, _) in zip(self._used, self.script)
            if not used and (tag is None or fnmatch.fnmatchcase(tag, pattern))
        )


def _transient(exc: Exception) -> bool:
    if isinstance(exc, httpx.TransportError):
        return True
    if isinstance(exc, httpx.HTTPStatusError):
        return exc.response.status_code == 429 or exc.response.status_code >= 500
    return False


def _with_retries(call, retries, backoff, sleep):
    attempt = 0
    while True:
        try:
            return call()
        except (httpx.TransportError, httpx.HTTPStatusError) as exc:
            if not _transient(exc) or attempt >= retries:
                raise GatewayFailure(f"{type(exc).__name__}: {exc}") from exc
            delay = backoff * (2**attempt)
            logger.warning("transient gateway failure (%s); retry %d in %.1fs", exc, attempt + 1, delay)
            sleep(delay)
            attempt += 1


class RemoteChatBackend:
    """OpenAI-style ``/chat/completions`` client."""

    def __init__(
        self,
        api_base: str,
        api_key: str,
        model: str = "gpt-4o",
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        backoff: float = 0.5,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout)

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

        def call():
            resp = self.client.post(
                f"{self.api_base}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
            )
            resp.raise_for_status()
            return resp.json()

        body = _with_retries(call, self.retries, self.backoff, self.sleep)
        try:
            return body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayFailure(f"unexpected completion payload: {body!r:.200}") from exc


# ------------------------------------------------------------------- embedders


class HashEmbedder:
    """Counts of hashed character trigrams, L2-normalised.

    Text is lowercased first; strings shorter than three characters count as a
    single gram.
    """

    def __init__(self, dim: int = EMBEDDING_DIM):
        self.dim = dim

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, text: str) -> tuple[float, ...]:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        s = text.lower()
        grams = [s[i : i + 3] for i in range(len(s) - 2)] or [s]
        counts = [0] * self.dim
        for g in grams:
            counts[self._bucket(g)] += 1
        norm = math.sqrt(sum(c * c for c in counts))
        return tuple(c / norm for c in counts)


class RemoteEmbedder:
    """OpenAI-style ``/embeddings`` client; vectors are re-normalised locally."""

    def __init__(self, api_base, api_key, model="text-embedding-3-small", dim=1536,
                 timeout=DEFAULT_TIMEOUT, retries=DEFAULT_RETRIES, client=None, sleep=time.sleep):
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.dim = dim
        self.retries = retries
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> tuple[float, ...]:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")

        def call():
            resp = self.client.post(
                f"{self.api_base}/embeddings",
                json={"model": self.model, "input": text},
                headers={"Authorization": f"Bearer {self.api_key}"},
            )
            resp.raise_for_status()
            return resp.json()

        body = _with_retries(call, self.retries, 0.5, self.sleep)
        vec = [float(x) for x in body["data"][0]["embedding"]]
        norm = math.sqrt(sum(x * x for x in vec)) or 1.0
        return tuple(x / norm for x in vec)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity, exactly rounded dot product over the norms."""
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(a * a for a in u))
    nv = math.sqrt(math.fsum(b * b for b in v))
    if nu == 0 or nv == 0:
        return 0.0
    return max(-1.0, min(1.0, dot / (nu * nv)))


# -------------------------------------------------------------- search clients


class NoSearch:
    def search(self, query, k):
        raise SearchUnavailable("no web-search client configured")


class FixtureSearch:
    """Canned results keyed by exact query; a ``"*"`` key acts as default."""

    def __init__(self, fixtures: Optional[dict[str, list[SearchResult]]] = None):
        self.fixtures = dict(fixtures or {})

    def search(self, query, k):
        results = self.fixtures.get(query, self.fixtures.get("*", []))
        return list(results[:k])


class RemoteSearch:
    """Tavily-style ``POST /search`` client."""

    def __init__(self, api_base, api_key, timeout=DEFAULT_TIMEOUT, retries=DEFAULT_RETRIES,
                 client=None, sleep=time.sleep):
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.retries = retries
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout)

    def search(self, query, k):
        def call():
            resp = self.client.post(
                f"{self.api_base}/search",
                json={"api_key": self.api_key, "query": query, "max_results": k},
            )
            resp.raise_for_status()
            return resp.json()

        try:
            body = _with_retries(call, self.retries, 0.5, self.sleep)
        except GatewayFailure as exc:
            raise SearchUnavailable(str(exc)) from exc
        out = []
        for item in body.get("results", [])[:k]:
            out.append(
                SearchResult(
                    title=item.get("title", ""),
                    snippet=item.get("snippet") or item.get("content", ""),
                    url=item.get("url", ""),
                )
            )
        return out


# --------------------------------------------------------------------- gateway


@dataclass
class Gateway:
    """Uniform front for the three provider kinds, with call accounting."""

    chat: object
    embedder: object = field(default_factory=HashEmbedder)
    searcher: object = field(default_factory=NoSearch)
    model_temperature: float = 0.0
    max_tokens: int = 1024
    calls: Counter = field(default_factory=Counter)
    search_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def dim(self) -> int:
        return self.embedder.dim

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls[request.tag] += 1
        return self.chat.complete(request)

    def ask(self, tag: str, system: str, user: str, temperature: Optional[float] = None) -> str:
        temp = self.model_temperature if temperature is None else temperature
        return self.complete(CompletionRequest(system, user, tag, temp, self.max_tokens))

    def embed_text(self, text: str) -> tuple[float, ...]:
        return self.embedder.embed(text)

    def web_search(self, query: str, k: int) -> list[SearchResult]:
        if k <= 0:
            raise ValueError("k must be positive")
        with self._lock:
            self.search_calls += 1
        return self.searcher.search(query, k)

    # construction helpers

    @classmethod
    def scripted(cls, entries=(), search=None, dim=EMBEDDING_DIM) -> "Gateway":
        return cls(
            chat=ScriptedBackend(entries),
            embedder=HashEmbedder(dim),
            searcher=FixtureSearch(search or {}),
        )

    @classmethod
    def from_script_file(cls, path, dim=EMBEDDING_DIM) -> "Gateway":
        entries, search = load_script(path)
        return cls.scripted(entries, search, dim)

    @classmethod
    def from_env(cls, model="gpt-4o", timeout=DEFAULT_TIMEOUT, env=None, dim=EMBEDDING_DIM) -> "Gateway":
        env = os.environ if env is None else env
        key, base = env.get("LLM_API_KEY"), env.get("LLM_API_BASE", "https://api.openai.com/v1")
        if not key:
            raise GatewayFailure("LLM_API_KEY is not set and no script was supplied")
        chat = RemoteChatBackend(base, key, model=model, timeout=timeout)
        if env.get("SEARCH_API_KEY"):
            searcher = RemoteSearch(env.get("SEARCH_API_BASE", "https://api.tavily.com"),
                                    env["SEARCH_API_KEY"], timeout=timeout)
        else:
            searcher = NoSearch()
        return cls(chat=chat, embedder=HashEmbedder(dim), searcher=searcher)


def load_script(path) -> tuple[list[tuple[str, str]], dict[str, list[SearchResult]]]:
    """Read a JSONL script file.

    Lines are either ``{"tag": ..., "response": ...}`` chat entries or
    ``{"search": query, "results": [{"title", "snippet", "url"}, ...]}`` fixtures.
    Blank lines and lines starting with ``#`` or ``//`` are ignored.
    """
    entries, search = [], {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith(("#", "//")):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise GatewayFailure(f"{path}:{lineno}: bad script line: {exc}") from exc
        if "search" in obj:
            search[obj["search"]] = [SearchResult(**r) for r in obj.get("results", [])]
        elif "tag" in obj and "response" in obj:
            entries.append((obj["tag"], obj["response"]))
        else:
            raise GatewayFailure(f"{path}:{lineno}: script line needs tag/response or search/results")
    return entries, search
