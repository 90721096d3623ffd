"""Run the bundled Lean Startup scenario in single, cot and mas modes and print the report table.

Usage: python scripts/run_lean_eval.py [OUT_DIR] [--live]

Without --live the bundled scripted replay is used (no network). With --live
the gateway reads LLM_API_KEY / LLM_API_BASE (and optionally SEARCH_API_KEY)
from the environment.
"""
import argparse
from pathlib import Path

from agentteam.gateway import Gateway
from agentteam.orchestrator import FixedClock, utc_now
from agentteam.scenario import bundled_script_path, load_scenario, report_table, run_eval, write_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", nargs="?", default="runs/lean")
    ap.add_argument("--live", action="store_true", help="call a real provider instead of the scripted replay")
    ap.add_argument("--modes", default="single,cot,mas")
    args = ap.parse_args()

    scenario = load_scenario()
    if args.live:
        cfg = scenario.config
        gw = Gateway.from_env(model=cfg.model, timeout=cfg.timeout, dim=cfg.embedding_dim)
        clock_factory = lambda: utc_now
    else:
        gw = Gateway.from_script_file(bundled_script_path())
        clock_factory = FixedClock

    runs = run_eval(scenario, None, args.modes.split(","), gw, clock_factory=clock_factory)
    write_report(args.out_dir, scenario, scenario.seed_task, runs)
    print(report_table(runs), end="")
    print(f"\nLLM calls by tag: {dict(sorted(gw.calls.items()))}")
    print(f"wrote {Path(args.out_dir).resolve()}")


if __name__ == "__main__":
    main()
