"""Dialects versus patterns at several thresholds on a synthetic corpus.

Samples a corpus from a mixture spec (the CSV-like fixture by default), then
prints, for each threshold, how many dialects and how many message patterns
reach it.
"""
import argparse
import os

from dialectdecomp.decomp import decompose, dialect_count_lower_bound
from dialectdecomp.harness import aggregate_counts, matrix_from_patterns
from dialectdecomp.model import load_spec, sample_corpus
from dialectdecomp.report import dialect_reports, pattern_rows

HERE = os.path.dirname(os.path.abspath(__file__))
DEFAULT_SPEC = os.path.join(HERE, os.pardir, "tests", "fixtures", "csv_like_spec.json")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", default=DEFAULT_SPEC)
    ap.add_argument("--n-files", type=int, default=3005)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--thresholds", type=int, nargs="+", default=[1, 5, 25, 100])
    args = ap.parse_args()
    spec = load_spec(args.spec)
    pats, _ = sample_corpus(spec, args.n_files, args.seed)
    _, f = aggregate_counts(matrix_from_patterns(spec.universe, pats))
    d = decompose(f)
    print(f"{len(spec.dialects)} planted dialects, {args.n_files} files, {len(f)} observed patterns, "
          f"{len(d)} terms, cover bound {dialect_count_lower_bound(d)}")
    print(f"{'threshold':>9} {'dialects':>8} {'patterns':>8}")
    for t in args.thresholds:
        print(f"{t:>9} {len(dialect_reports(d, t)):>8} {len(pattern_rows(f, t)):>8}")


if __name__ == "__main__":
    main()
