"""Command line entry point: ingest, patterns, decompose, hasse, synth, oracle."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, report
from .decomp import CountFunction, decompose
from .enumerate import MAX_ELEMENTS, SizeError, oracle
from .model import ValidationError, load_spec, sample_corpus
from .poset import PatternPoset


class CLIError(Exception):
    pass


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def load_input(path: str, threshold: float | None = None) -> tuple[PatternPoset, CountFunction]:
    """Pattern counts from a count JSON, a sparse matrix JSON or a dense matrix CSV."""
    if not os.path.exists(path):
        raise CLIError(f"{path}: no such file")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".json":
        with open(path) as fh:
            text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise CLIError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
        if isinstance(obj, dict) and "patterns" in obj:
            if threshold is not None:
                raise CLIError("--threshold needs a file-message matrix, not pattern counts")
            return harness.loads_counts(text, path)
        m = harness.loads_matrix(text, "json", path)
    elif ext == ".csv":
        m = harness.load_matrix(path)
    else:
        raise CLIError(f"{path}: expected a .json or .csv input")
    if threshold is not None:
        m, inverted = harness.invert_frequent_messages(m, threshold)
        for name in inverted:
            print(f"inverted: {name}", file=sys.stderr)
    return harness.aggregate_counts(m)


def cmd_ingest(args) -> None:
    config = harness.load_config(args.config)
    files = []
    for p in args.files:
        if os.path.isdir(p):
            files += sorted(os.path.join(root, n) for root, _, names in os.walk(p) for n in names)
        elif os.path.isfile(p):
            files.append(p)
        else:
            raise CLIError(f"{p}: no such file or directory")
    m = harness.run_harness(config, files, workers=args.workers)
    threshold = config.inversion_threshold if args.threshold is None else args.threshold
    m, inverted = harness.invert_frequent_messages(m, threshold)
    m = harness.FileMessageMatrix(m.universe, m.rows, {**m.provenance, "inverted": inverted})
    for name in inverted:
        print(f"inverted: {name}", file=sys.stderr)
    if args.output:
        harness.save_matrix(m, args.output)
    else:
        sys.stdout.write(harness.dumps_matrix(m, "csv"))
    if args.counts:
        harness.save_counts(*harness.aggregate_counts(m), args.counts)


def cmd_patterns(args) -> None:
    _, f = load_input(args.input, args.threshold)
    _emit(report.render_patterns(report.pattern_rows(f, args.min_count), args.format), args.output)


def cmd_decompose(args) -> None:
    _, f = load_input(args.input, args.threshold)
    d = decompose(f)
    notes = report.load_annotations(args.annotations) if args.annotations else None
    rep = report.dialect_report(d, args.min_count, args.sort, notes)
    if args.format == "json":
        text = report.render_json(rep)
    else:
        rows = report.dialect_reports(d, args.min_count, args.sort, notes)
        if args.format == "csv":
            text = report.render_dialects_csv(rows)
        else:
            text = report.render_dialects_text(rows, rep["summary"], args.min_count)
    _emit(text, args.output)


def cmd_hasse(args) -> None:
    poset, f = load_input(args.input, args.threshold)
    _emit(report.to_dot(poset, f), args.output)


def cmd_synth(args) -> None:
    spec = load_spec(args.config)
    patterns, prov = sample_corpus(spec, args.n_files, args.seed)
    m = harness.matrix_from_patterns(spec.universe, patterns, prov)
    if args.kind == "counts":
        text = harness.dumps_counts(*harness.aggregate_counts(m))
    else:
        fmt = "csv" if (args.output or "").lower().endswith(".csv") else "json"
        text = harness.dumps_matrix(m, fmt)
    _emit(text, args.output)


def _element_label(poset: PatternPoset, y: int) -> str:
    names = poset.label(y)
    return names[0] if len(names) == 1 else "{" + ",".join(names) + "}"


def _term_label(poset: PatternPoset, y: int) -> str:
    return "U_" + _element_label(poset, y)


def cmd_oracle(args) -> None:
    poset, f = load_input(args.input)
    v = oracle(f, args.max_terms, MAX_ELEMENTS, args.max_total)
    greedy = " + ".join(
        f"{_term_label(poset, t.root)}({', '.join(f'{_element_label(poset, x)}:{c}' for x, c in sorted(t.g.items()))})"
        for t in v.greedy.terms
    ) or "0"
    lines = [f"greedy: {greedy}", f"minimal: {'yes' if v.minimal else 'no'}"]
    if v.witness is not None:
        lines.append(
            "  refines: " + " + ".join(_term_label(poset, t.root) + str(tuple(t.g.values())) for t in v.witness.terms)
        )
    sets = ["{" + ", ".join(_term_label(poset, y) for y in roots) + "}" for roots in v.root_multisets]
    if v.shared_supports:
        lines.append(f"shared supports: {sets[0] if sets else '{}'}")
    else:
        lines.append(f"shared supports: no ({'; '.join(sets)})")
    lines.append(f"lower bound: {v.lower_bound}")
    _emit("\n".join(lines) + "\n", args.output)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dialectdecomp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=True, threshold=True):
        p.add_argument("--input", required=True, help="pattern-count JSON, sparse matrix JSON or dense matrix CSV")
        p.add_argument("--output", help="write here instead of standard output")
        if fmt:
            p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        if threshold:
            p.add_argument("--threshold", type=float, help="invert messages above this frequency first")

    p = sub.add_parser("ingest", help="run parsers over files and write the file-message matrix")
    p.add_argument("--config", required=True, help="harness config JSON")
    p.add_argument("--output", help="matrix path (.csv dense, .json sparse); CSV to stdout if omitted")
    p.add_argument("--counts", help="also write aggregated pattern counts here")
    p.add_argument("--threshold", type=float, help="inversion threshold (config value by default)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("files", nargs="+", help="files or directories")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("patterns", help="pattern count table")
    common(p)
    p.add_argument("--min-count", type=int, default=5)
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("decompose", help="candidate dialects in order of discovery")
    common(p)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--sort", choices=("discovery", "count"), default="discovery")
    p.add_argument("--annotations", help="JSON list of {required, annotation}")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("hasse", help="Hasse diagram of observed patterns in DOT")
    common(p, fmt=False)
    p.set_defaults(func=cmd_hasse)

    p = sub.add_parser("synth", help="sample a corpus from a mixture spec")
    p.add_argument("--config", required=True, help="mixture spec JSON")
    p.add_argument("--output", help="output path; .csv gives a dense matrix")
    p.add_argument("--n-files", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("matrix", "counts"), default="matrix")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle", help="check the greedy decomposition by exhaustive enumeration")
    common(p, fmt=False, threshold=False)
    p.add_argument("--max-terms", type=int, help="largest decomposition enumerated (default: total count)")
    p.add_argument("--max-total", type=int, default=16, help="largest total count accepted")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SizeError as e:
        print(f"error: {e}; exhaustive checks are for desk-scale instances only", file=sys.stderr)
        return 1
    except (CLIError, ValidationError, harness.ConfigError, harness.FormatError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
