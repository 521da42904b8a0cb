"""Rerun the published covering-array benchmark and compare sizes.

    python3 scripts/table1.py                      # every row, 60 s each
    python3 scripts/table1.py --time-limit 10 --only 3,5,2 4,6,2
    python3 scripts/table1.py --max-interactions 2000 --enrich

Prints a markdown table with the published column-generation (CG) and
greedy (HR) sizes next to ours, the root LP bound and our greedy size.
"""
from __future__ import annotations

import argparse
import math
import sys

from cagen import CGConfig, run_column_generation, uniform_instance, verify_covering_array

# (t, k, g): (published CG size, published greedy size, CG size proven optimal)
PUBLISHED = {
    (2, 3, 3): (9, 9, True),
    (2, 3, 4): (16, 16, True),
    (2, 3, 5): (27, 25, False),
    (2, 3, 6): (38, 36, False),
    (2, 5, 2): (6, 6, True),
    (2, 5, 3): (11, 15, True),
    (2, 6, 3): (13, 15, False),
    (3, 4, 2): (8, 8, True),
    (3, 5, 2): (10, 12, True),
    (3, 6, 2): (12, 12, True),
    (3, 7, 2): (12, 13, True),
    (3, 8, 2): (13, 13, False),
    (3, 9, 2): (17, 18, False),
    (3, 10, 2): (18, 18, False),
    (3, 11, 2): (19, 18, False),
    (3, 12, 2): (21, 18, False),
    (3, 13, 2): (22, 19, False),
    (3, 14, 2): (23, 19, False),
    (3, 15, 2): (24, 19, False),
    (4, 5, 2): (16, 24, True),
    (4, 6, 2): (24, 28, False),
    (4, 7, 2): (26, 38, False),
    (4, 8, 2): (32, 42, False),
    (4, 9, 2): (37, 50, False),
    (4, 10, 2): (40, 50, False),
    (4, 5, 3): (104, 135, False),
}


def parse_key(text: str) -> tuple[int, int, int]:
    try:
        t, k, g = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected t,k,g, got {text!r}")
    return t, k, g


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--time-limit", type=float, default=60.0, help="seconds per instance")
    ap.add_argument("--only", nargs="+", type=parse_key, default=None, metavar="T,K,G")
    ap.add_argument("--max-interactions", type=int, default=None, help="skip larger instances")
    ap.add_argument("--enrich", action="store_true", help="enable reduced-cost pool enrichment")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    keys = args.only or list(PUBLISHED)
    print("| t | k | g | published CG | published HR | ours | LP bound | LB | greedy | optimal | time (s) |")
    print("|---|---|---|---|---|---|---|---|---|---|---|")
    worse = 0
    for key in keys:
        inst = uniform_instance(*key)
        if args.max_interactions and inst.num_interactions > args.max_interactions:
            continue
        config = CGConfig(time_limit_seconds=args.time_limit, enrich_pool=args.enrich, seed=args.seed)
        r = run_column_generation(inst, config)
        if not verify_covering_array(inst, r.tests):
            print(f"invalid suite for {key}", file=sys.stderr)
            return 1
        cg, hr, bold = PUBLISHED.get(key, (None, None, False))
        pub = "-" if cg is None else (f"**{cg}**" if bold else str(cg))
        worse += cg is not None and r.ip_objective > cg
        lp = f"{r.lp_bound:.3f}" if math.isfinite(r.lp_bound) else "-"
        print(f"| {key[0]} | {key[1]} | {key[2]} | {pub} | {hr if hr is not None else '-'} | {r.ip_objective} "
              f"| {lp} | {r.lower_bound} | {r.greedy_size} | {'yes' if r.optimal else 'no'} "
              f"| {r.wall_time:.1f} |", flush=True)
    print(f"\n{worse} row(s) larger than the published CG size", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
