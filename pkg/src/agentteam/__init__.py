"""Hierarchical multi-agent LLM sessions with a graph knowledge base, an
answer set programming fallback, corrective retrieval and explicit belief states."""

__version__ = "0.1.0"
