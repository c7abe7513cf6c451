"""Check the refinement and support claims on every small poset and count function.

For each instance the greedy decomposition is compared against an exhaustive
enumeration of integer decompositions. Prints per-size counts of instances where

  refines-other   the greedy output refines a different decomposition
  roots-differ    minimal decompositions disagree on their root multisets
  bound-differs   the cover bound differs from a minimal decomposition's term count
  mutual          two different decompositions refine each other
"""
import argparse
import itertools
import time
from collections import Counter

from dialectdecomp.decomp import CountFunction, decompose, dialect_count_lower_bound, refines
from dialectdecomp.enumerate import enumerate_integer_decompositions, minimal_decompositions, small_posets


def audit(f, full):
    d = decompose(f)
    cap = max(1, int(f.total))
    out = Counter()
    above = enumerate_integer_decompositions(f, cap, max_total=f.total + 1, refined_by=d)
    if any(e.canonical() != d.canonical() for e in above):
        out["refines-other"] += 1
    if full:
        ds = enumerate_integer_decompositions(f, cap, max_total=f.total + 1)
        mins = minimal_decompositions(ds)
        roots = {tuple(sorted(e.roots)) for e in mins}
        if len(roots) > 1:
            out["roots-differ"] += 1
        if any(len(e) != dialect_count_lower_bound(d) for e in mins):
            out["bound-differs"] += 1
        for a, b in itertools.combinations(ds, 2):
            if refines(a, b) and refines(b, a):
                out["mutual"] += 1
                break
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--max-n", type=int, default=4)
    ap.add_argument("--max-value", type=int, default=3)
    ap.add_argument("--full-max-n", type=int, default=4, help="largest size for the full enumeration checks")
    args = ap.parse_args()
    print(f"{'n':>2} {'posets':>6} {'instances':>9} {'refines-other':>13} {'roots-differ':>12} {'bound-differs':>13} {'mutual':>6} {'secs':>6}")
    for n in range(1, args.max_n + 1):
        t = time.perf_counter()
        posets = small_posets(n)
        total = Counter()
        count = 0
        for p in posets:
            for vals in itertools.product(range(args.max_value + 1), repeat=n):
                total += audit(CountFunction(p, vals), n <= args.full_max_n)
                count += 1
        full = n <= args.full_max_n
        cell = lambda k: str(total[k]) if full else "-"
        print(
            f"{n:>2} {len(posets):>6} {count:>9} {total['refines-other']:>13} {cell('roots-differ'):>12} "
            f"{cell('bound-differs'):>13} {cell('mutual'):>6} {time.perf_counter() - t:>6.1f}"
        )


if __name__ == "__main__":
    main()
