"""Cross-check the stable-model engine against brute-force enumeration and time it.

Usage: python scripts/asp_oracle_bench.py [N_PROGRAMS] [--max-atoms 6] [--max-rules 8] [--seed 0]

Optionally compares against clingo too when it is on PATH.
"""
import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import brute_force_stable_models, random_ground_program  # noqa: E402

from agentteam.asp import parse_asp, solve_source  # noqa: E402
from agentteam.asp.solve import ExternalSolver  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("n", nargs="?", type=int, default=2000)
    ap.add_argument("--max-atoms", type=int, default=6)
    ap.add_argument("--max-rules", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    clingo = ExternalSolver()
    use_clingo = clingo.available()
    rng = random.Random(args.seed)
    mismatches = clingo_mismatches = 0
    engine_time = 0.0
    histogram = {}
    for i in range(args.n):
        src, rules, universe = random_ground_program(rng, args.max_atoms, args.max_rules, arg_atoms=bool(i % 2))
        t0 = time.perf_counter()
        got = [tuple(sorted(str(a) for a in m)) for m in solve_source(src).models]
        engine_time += time.perf_counter() - t0
        want = brute_force_stable_models(rules, universe)
        histogram[len(got)] = histogram.get(len(got), 0) + 1
        if got != want:
            mismatches += 1
            print(f"MISMATCH #{i}\n{src}engine={got}\noracle={want}", file=sys.stderr)
        if use_clingo:
            ext = [tuple(sorted(str(a) for a in m)) for m in clingo.solve(parse_asp(src)).models]
            clingo_mismatches += ext != got

    print(f"programs: {args.n}  mismatches: {mismatches}  engine time: {engine_time:.3f} s")
    print("models per program: " + ", ".join(f"{k}:{v}" for k, v in sorted(histogram.items())))
    if use_clingo:
        print(f"clingo disagreements: {clingo_mismatches}")
    return 1 if mismatches or clingo_mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
