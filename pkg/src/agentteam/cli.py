"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error. Data goes to stdout,
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .asp import MAX_ENUMERATED_ATOMS, render_models, solve_source
from .config import load_config
from .crag import CragPipeline, VectorStore
from .errors import AgentTeamError, UnsupportedMode
from .gateway import Gateway, HashEmbedder
from .knowledge import KnowledgeGraph, KnowledgeTriple, parse_triple_line
from .orchestrator import FixedClock, Session, parse_agent_message, utc_now
from .scenario import RunMode, load_scenario, run_eval, single_shot, write_report

log = logging.getLogger("agentteam")

KB_FILE = "kb.jsonl"
COLLECTIONS_DIR = "collections"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message} (try --help)", file=sys.stderr)
        raise SystemExit(2)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="session/scenario JSON file")
    p.add_argument("--script", help="scripted backend JSONL; no network is used when given")
    p.add_argument("--data-dir", default="data", help="KB and collection storage (default: ./data)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised tie-breaking (currently unused)")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="agentteam", description="Hierarchical multi-agent sessions with a logic-backed KB.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("run", parents=[common], help="run one task in a given mode")
    p.add_argument("--task", help="task text (default: the scenario's seed task)")
    p.add_argument("--mode", default="mas", choices=[m.value for m in RunMode])
    p.add_argument("--out", required=True, help="transcript JSONL path")

    p = sub.add_parser("kb-add", parents=[common], help="add facts to the knowledge base")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--triple", action="append", help="'subject | predicate | object' (repeatable)")
    g.add_argument("--message", help="file holding a three-section agent message; facts are LLM-extracted")
    p.add_argument("--agent", default="user")
    p.add_argument("--turn", type=int, default=0)

    p = sub.add_parser("kb-query", parents=[common], help="ask the knowledge base a question")
    p.add_argument("question")
    p.add_argument("--threshold", type=int, default=None)

    p = sub.add_parser("kb-dump", parents=[common], help="print the knowledge base as JSONL")
    p.add_argument("--out", help="write to this file instead of stdout")

    p = sub.add_parser("asp-solve", parents=[common], help="print the stable models of an .lp file")
    p.add_argument("program", help="program file ('-' for stdin)")
    p.add_argument("--max-atoms", type=int, default=MAX_ENUMERATED_ATOMS)

    p = sub.add_parser("rag-ingest", parents=[common], help="add documents to a collection")
    p.add_argument("--collection", required=True)
    p.add_argument("files", nargs="+", help="text files, one document each; .jsonl files hold {text, metadata} lines")

    p = sub.add_parser("rag-query", parents=[common], help="answer a question with corrective retrieval")
    p.add_argument("--collection", required=True)
    p.add_argument("query")
    p.add_argument("-k", type=int, default=4)

    p = sub.add_parser("eval", parents=[common], help="compare run modes on one task")
    p.add_argument("--task")
    p.add_argument("--modes", default="single,cot,mas", help="comma-separated subset of single,cot,mas")
    p.add_argument("--out-dir", required=True)
    return parser


def _gateway(args, cfg=None):
    dim = cfg.embedding_dim if cfg else 256
    if args.script:
        gw = Gateway.from_script_file(args.script, dim=dim)
    else:
        gw = Gateway.from_env(model=cfg.model if cfg else "gpt-4o", timeout=cfg.timeout if cfg else 60.0, dim=dim)
    if cfg is not None:
        gw.model_temperature = cfg.temperature
        gw.max_tokens = cfg.max_tokens
    return gw


def _scenario(args):
    return load_scenario(args.config) if args.config else load_scenario()


def _clock_factory(args):
    return FixedClock if args.script else (lambda: utc_now)


def cmd_run(args, out):
    cfg = load_config(args.config) if args.config else load_scenario().config
    gw = _gateway(args, cfg)
    task = args.task or cfg.seed_task
    if not task:
        raise UsageError("--task is required when the config has no seed_task")
    clock = _clock_factory(args)()
    if args.mode == RunMode.MAS.value:
        transcript = Session(cfg, gw, clock=clock).run(task)
    elif args.mode == RunMode.TOT.value:
        raise UnsupportedMode("tree-of-thoughts mode is reserved but not implemented")
    else:
        transcript = single_shot(gw, args.mode, task, clock)
    transcript.write_jsonl(args.out)
    print(f"wrote {len(transcript)} messages to {args.out} ({transcript.end_reason})", file=sys.stderr)


def _kb_path(args):
    return Path(args.data_dir) / KB_FILE


def cmd_kb_add(args, out):
    path = _kb_path(args)
    kb = KnowledgeGraph.load(path)
    if args.triple:
        batch = []
        for line in args.triple:
            parsed = parse_triple_line(line)
            if parsed is None:
                raise UsageError(f"not a 'subject | predicate | object' triple: {line!r}")
            batch.append(KnowledgeTriple(*parsed, source_turn=args.turn, source_agent=args.agent))
        added = kb.insert(batch)
    else:
        raw = Path(args.message).read_text(encoding="utf-8")
        msg = parse_agent_message(raw, args.agent, args.turn)
        cfg = load_config(args.config) if args.config else None
        added = kb.add_to_kb(_gateway(args, cfg), msg)
    path.parent.mkdir(parents=True, exist_ok=True)
    kb.dump(path)
    for t in added:
        out.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
    print(f"added {len(added)} triple(s); store holds {len(kb)}", file=sys.stderr)


def cmd_kb_query(args, out):
    cfg = load_config(args.config) if args.config else None
    threshold = args.threshold or (cfg.kb_threshold if cfg else 2)
    kb = KnowledgeGraph.load(_kb_path(args))
    answer = kb.query_knowledge_base(_gateway(args, cfg), args.question, threshold)
    out.write(json.dumps({"text": answer.text, "source": answer.source, "rows_found": answer.rows_found},
                         sort_keys=True) + "\n")
    if answer.diagnostic:
        print(answer.diagnostic, file=sys.stderr)


def cmd_kb_dump(args, out):
    kb = KnowledgeGraph.load(_kb_path(args))
    if args.out:
        kb.dump(args.out)
        print(f"wrote {len(kb)} triple(s) to {args.out}", file=sys.stderr)
    else:
        out.write(kb.dumps())


def cmd_asp_solve(args, out):
    source = sys.stdin.read() if args.program == "-" else Path(args.program).read_text(encoding="utf-8")
    models = solve_source(source, args.max_atoms)
    out.write(render_models(models))
    if not models.models:
        print("no stable models", file=sys.stderr)


def _store(args, dim=256):
    return VectorStore(HashEmbedder(dim), Path(args.data_dir) / COLLECTIONS_DIR)


def cmd_rag_ingest(args, out):
    texts, metas = [], []
    for f in args.files:
        p = Path(f)
        if p.suffix == ".jsonl":
            for line in p.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    d = json.loads(line)
                    texts.append(d["text"])
                    metas.append(d.get("metadata", {}))
        else:
            texts.append(p.read_text(encoding="utf-8").strip())
            metas.append({"source": p.name})
    cfg = load_config(args.config) if args.config else None
    store = _store(args, cfg.embedding_dim if cfg else 256)
    before = store.size(args.collection) if args.collection in store.collections() else 0
    ids = store.ingest(args.collection, texts, metas)
    for i in ids:
        out.write(i + "\n")
    print(f"collection {args.collection}: {store.size(args.collection) - before} new, "
          f"{store.size(args.collection)} total", file=sys.stderr)


def cmd_rag_query(args, out):
    cfg = load_config(args.config) if args.config else None
    gw = _gateway(args, cfg)
    store = _store(args, gw.dim)
    answer = CragPipeline(gw, store, args.k).answer_with_crag(args.collection, args.query)
    out.write(json.dumps({"text": answer.text, "route": answer.route,
                          "used_documents": list(answer.used_documents)}, sort_keys=True) + "\n")


def cmd_eval(args, out):
    scenario = _scenario(args)
    gw = _gateway(args, scenario.config)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in {r.value for r in RunMode}:
            raise UsageError(f"unknown mode {m!r}")
    task = args.task or scenario.seed_task
    runs = run_eval(scenario, task, modes, gw, clock_factory=_clock_factory(args))
    write_report(args.out_dir, scenario, task, runs)
    print(f"wrote report for {len(runs)} run(s) to {args.out_dir}", file=sys.stderr)


COMMANDS = {
    "run": cmd_run,
    "kb-add": cmd_kb_add,
    "kb-query": cmd_kb_query,
    "kb-dump": cmd_kb_dump,
    "asp-solve": cmd_asp_solve,
    "rag-ingest": cmd_rag_ingest,
    "rag-query": cmd_rag_query,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args, sys.stdout)
    except UsageError as exc:
        print(f"agentteam {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (AgentTeamError, OSError, json.JSONDecodeError) as exc:
        print(f"agentteam {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
