"""Corrective retrieval: vector lookup, relevance grading, web fallback, synthesis."""
from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import DimensionMismatch, EmptyText, UnknownCollection
from .gateway import cosine

logger = logging.getLogger(__name__)

DEFAULT_K = 4
# scores closer than this are ties, broken by ascending document id
SCORE_DECIMALS = 12

GRADER_SYSTEM = "You grade whether a document is relevant to a question. Answer with one word."


@dataclass(frozen=True)
class Document:
    id: str
    collection: str
    text: str
    vector: tuple
    metadata: dict = field(default_factory=dict, hash=False, compare=False)

    def to_dict(self):
        return {"id": self.id, "text": self.text, "vector": list(self.vector), "metadata": self.metadata}


@dataclass(frozen=True)
class GradedDocument:
    document: Document
    score: float
    label: str  # "relevant" | "irrelevant"


@dataclass(frozen=True)
class CragAnswer:
    text: str
    route: str  # "internal" | "web_fallback"
    used_documents: tuple = ()


def document_id(text: str) -> str:
    return "doc-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def ranking_key(score: float, doc_id: str):
    return (-round(score, SCORE_DECIMALS), doc_id)


class VectorStore:
    """Named collections of embedded documents, scanned linearly.

    With a ``data_dir`` each collection is mirrored to ``<data_dir>/<name>.jsonl``.
    """

    def __init__(self, embedder, data_dir=None):
        self.embedder = embedder
        self.data_dir = Path(data_dir) if data_dir else None
        self._collections: dict[str, dict[str, Document]] = {}
        self._lock = threading.RLock()
        if self.data_dir and self.data_dir.is_dir():
            for p in sorted(self.data_dir.glob("*.jsonl")):
                self._load(p.stem, p)

    @property
    def dim(self):
        return self.embedder.dim

    def collections(self) -> list[str]:
        return sorted(self._collections)

    def create(self, collection: str) -> None:
        with self._lock:
            self._collections.setdefault(collection, {})

    def size(self, collection: str) -> int:
        return len(self._get(collection))

    def documents(self, collection: str) -> list[Document]:
        with self._lock:
            return sorted(self._get(collection).values(), key=lambda d: d.id)

    def _get(self, collection):
        try:
            return self._collections[collection]
        except KeyError:
            raise UnknownCollection(collection) from None

    def ingest(self, collection: str, texts: Sequence[str], metadata: Optional[Sequence[dict]] = None) -> list[str]:
        """Embed and store ``texts``; ids derive from content so repeats are no-ops."""
        metadata = list(metadata) if metadata is not None else [{} for _ in texts]
        if len(metadata) != len(texts):
            raise ValueError("texts and metadata must have the same length")
        prepared = []
        for text, meta in zip(texts, metadata):
            if not text or not text.strip():
                raise EmptyText("documents must have non-empty text")
            vec = self.embedder.embed(text)
            if len(vec) != self.dim:
                raise DimensionMismatch(f"embedder returned {len(vec)} dims, collection expects {self.dim}")
            prepared.append(Document(document_id(text), collection, text, vec, dict(meta)))
        ids = []
        with self._lock:
            docs = self._collections.setdefault(collection, {})
            for doc in prepared:
                docs.setdefault(doc.id, doc)
                ids.append(doc.id)
            self._persist(collection)
        return ids

    def retrieve_top_k(self, collection: str, query: str, k: int) -> list[tuple[Document, float]]:
        if k < 0:
            raise ValueError("k must be non-negative")
        with self._lock:
            docs = list(self._get(collection).values())
        if k == 0 or not docs:
            return []
        q = self.embedder.embed(query)
        scored = [(d, cosine(q, d.vector)) for d in docs]
        scored.sort(key=lambda pair: ranking_key(pair[1], pair[0].id))
        return scored[:k]

    # persistence

    def _persist(self, collection):
        if not self.data_dir:
            return
        self.data_dir.mkdir(parents=True, exist_ok=True)
        docs = sorted(self._collections[collection].values(), key=lambda d: d.id)
        text = "".join(json.dumps(d.to_dict(), sort_keys=True) + "\n" for d in docs)
        (self.data_dir / f"{collection}.jsonl").write_text(text, encoding="utf-8")

    def _load(self, collection, path):
        docs = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            if len(d["vector"]) != self.dim:
                raise DimensionMismatch(
                    f"{path}: stored vectors have {len(d['vector'])} dims, embedder has {self.dim}"
                )
            docs[d["id"]] = Document(d["id"], collection, d["text"], tuple(d["vector"]), d.get("metadata", {}))
        self._collections[collection] = docs


class CragPipeline:
    def __init__(self, gateway, store: VectorStore, k: int = DEFAULT_K):
        self.gateway = gateway
        self.store = store
        self.k = k
        self.diagnostics: Counter = Counter()
        self.web_fallbacks = 0
        self.rewrites = 0

    def _grade_once(self, query, doc):
        prompt = (
            f"Question: {query}\n\nDocument:\n{doc.text}\n\n"
            "Reply with exactly one word: relevant or irrelevant."
        )
        return self.gateway.ask("grade_doc", GRADER_SYSTEM, prompt, temperature=0.0).strip().lower()

    def grade_documents(self, query: str, docs: Sequence, scores: Optional[Sequence[float]] = None) -> list[GradedDocument]:
        """Label each document with one grader call, retrying once on an unexpected reply."""
        graded = []
        for i, doc in enumerate(docs):
            label = self._grade_once(query, doc)
            if label not in ("relevant", "irrelevant"):
                label = self._grade_once(query, doc)
            if label not in ("relevant", "irrelevant"):
                self.diagnostics["grader_defaulted"] += 1
                label = "irrelevant"
            score = scores[i] if scores is not None else cosine(self.gateway.embed_text(query), doc.vector)
            graded.append(GradedDocument(doc, score, label))
        return graded

    def rewrite_query(self, query: str) -> str:
        if not query.strip():
            raise ValueError("query must be non-empty")
        self.rewrites += 1
        raw = self.gateway.ask(
            "rewrite_query",
            "You rewrite questions into concise web search queries.",
            f"Rewrite as a single-line web search query:\n{query}",
            temperature=0.0,
        )
        for line in raw.splitlines():
            if line.strip():
                return line.strip()
        return query

    def synthesize(self, query: str, sources: Sequence[tuple[str, str]]) -> str:
        listing = "\n\n".join(f"[{i}] ({ref})\n{text}" for i, (ref, text) in enumerate(sources, 1))
        return self.gateway.ask(
            "synthesize",
            "You write concise answers grounded in the given sources.",
            f"Question: {query}\n\nSources:\n{listing or '(no sources found)'}\n\n"
            "Answer using only these sources and cite them by number.",
        )

    def answer_with_crag(self, collection: str, query: str, k: Optional[int] = None) -> CragAnswer:
        k = self.k if k is None else k
        if k <= 0:
            raise ValueError("k must be positive")
        hits = self.store.retrieve_top_k(collection, query, k)
        graded = self.grade_documents(query, [d for d, _ in hits], [s for _, s in hits])
        relevant = [g.document for g in graded if g.label == "relevant"]
        if relevant:
            text = self.synthesize(query, [(d.id, d.text) for d in relevant])
            return CragAnswer(text, "internal", tuple(d.id for d in relevant))

        self.web_fallbacks += 1
        search_query = self.rewrite_query(query)
        results = self.gateway.web_search(search_query, k)
        text = self.synthesize(query, [(r.url, f"{r.title}\n{r.snippet}") for r in results])
        return CragAnswer(text, "web_fallback", tuple(r.url for r in results))
