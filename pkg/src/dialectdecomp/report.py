"""Dialect and pattern tables, JSON reports and Hasse diagrams in DOT."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .decomp import CountFunction, MonotonicDecomposition, dialect_count_lower_bound
from .poset import PatternPoset


@dataclass(frozen=True)
class DialectReport:
    rank: int
    required: list
    root_count: int | Fraction
    support_size: int
    annotation: str | None = None
    pattern_count: int | Fraction = 0  # files with exactly the required messages


def number(v):
    """JSON-safe exact number: integers stay integers, fractions become "p/q" strings."""
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    return v


def load_annotations(path) -> dict[frozenset, str]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a list of {{required, annotation}} objects")
    out = {}
    for i, rec in enumerate(data):
        try:
            out[frozenset(rec["required"])] = str(rec["annotation"])
        except (KeyError, TypeError) as e:
            raise ValueError(f"{path}: entry {i}: {e}") from e
    return out


def dialect_reports(
    d: MonotonicDecomposition,
    min_count=0,
    sort: str = "discovery",
    annotations: Mapping[frozenset, str] | None = None,
) -> list[DialectReport]:
    f = d.source
    poset = f.poset
    annotations = annotations or {}
    rows = []
    for rank, t in enumerate(d.terms, start=1):
        if t.root_value < min_count:
            continue
        names = poset.label(t.root)
        rows.append(
            DialectReport(
                rank=rank,
                required=names,
                root_count=t.root_value,
                support_size=len(t.g),
                annotation=annotations.get(frozenset(names)),
                pattern_count=f[t.root],
            )
        )
    if sort == "count":
        rows.sort(key=lambda r: (-r.root_count, r.rank))
    elif sort != "discovery":
        raise ValueError(f"unknown sort order {sort!r}")
    return rows


def pattern_rows(f: CountFunction, min_count=0) -> list[tuple[list, int]]:
    """Observed patterns with ``count >= min_count``, most frequent first; zero counts never appear."""
    poset = f.poset
    keep = [i for i in range(len(poset)) if f[i] and f[i] >= min_count]
    keep.sort(key=lambda i: (-f[i], i))
    return [(poset.label(i), f[i]) for i in keep]


def dialect_report(
    d: MonotonicDecomposition,
    min_count=5,
    sort: str = "discovery",
    annotations: Mapping[frozenset, str] | None = None,
) -> dict:
    rows = dialect_reports(d, min_count, sort, annotations)
    return {
        "dialects": [
            {
                "rank": r.rank,
                "required": r.required,
                "root_count": number(r.root_count),
                "support_size": r.support_size,
                "annotation": r.annotation,
            }
            for r in rows
        ],
        "summary": {
            "patterns_at_threshold": len(pattern_rows(d.source, min_count)),
            "dialects_at_threshold": len(rows),
            "lower_bound": dialect_count_lower_bound(d),
        },
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def _names(names: Sequence[str]) -> str:
    return " ".join(names) if names else "(none)"


def render_dialects_text(rows: list[DialectReport], summary: dict, min_count) -> str:
    lines = [f"{'rank':>4}  {'root':>8}  {'pattern':>8}  {'support':>7}  required"]
    for r in rows:
        flag = "" if r.pattern_count == r.root_count else " *"
        note = f"  [{r.annotation}]" if r.annotation else ""
        lines.append(
            f"{r.rank:>4}  {str(r.root_count):>8}  {str(r.pattern_count):>8}{flag:2}{r.support_size:>7}  {_names(r.required)}{note}"
        )
    lines.append(
        f"summary: {summary['dialects_at_threshold']} dialects and {summary['patterns_at_threshold']} patterns "
        f"with count >= {min_count}; lower bound on dialect count {summary['lower_bound']}"
    )
    if any(r.pattern_count != r.root_count for r in rows):
        lines.append("* root count differs from the exact-pattern file count")
    return "\n".join(lines) + "\n"


def render_dialects_csv(rows: list[DialectReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "root_count", "pattern_count", "support_size", "required", "annotation"])
    for r in rows:
        w.writerow([r.rank, r.root_count, r.pattern_count, r.support_size, " ".join(r.required), r.annotation or ""])
    return buf.getvalue()


def render_patterns(rows: list[tuple[list, int]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"patterns": [{"on": n, "count": number(c)} for n, c in rows]}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["count", "messages"])
        for n, c in rows:
            w.writerow([c, " ".join(n)])
        return buf.getvalue()
    lines = [f"{'count':>8}  messages"]
    lines += [f"{str(c):>8}  {_names(n)}" for n, c in rows]
    return "\n".join(lines) + "\n"


def node_size(count) -> float:
    return 0.5 * math.log1p(float(count))


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(poset: PatternPoset, f: CountFunction) -> str:
    """Hasse diagram, one node per observed pattern, edges from each pattern to its covers."""
    lines = ["digraph patterns {", "  rankdir=BT;", "  node [shape=circle, fixedsize=true];"]
    for i in range(len(poset)):
        label = ", ".join(poset.label(i)) or "{}"
        size = f"{node_size(f[i]):.4f}"
        text = _quote(f"{label}\n{f[i]}").replace("\n", "\\n")
        lines.append(f"  n{i} [label={text}, width={size}, height={size}];")
    for lo, hi in poset.hasse_edges:
        lines.append(f"  n{lo} -> n{hi};")
    lines.append("}")
    return "\n".join(lines) + "\n"
