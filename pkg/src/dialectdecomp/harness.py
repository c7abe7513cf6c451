"""Run parser commands over files, turn their output into Boolean messages and count message patterns."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
import shlex
import shutil
import signal
import subprocess
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .decomp import CountFunction
from .poset import MessagePattern, MessageUniverse, PatternPoset, build_poset, iter_bits, mask_of

PLACEHOLDER = "{file}"
ABSENCE = "absence-of-"
RULE_KINDS = ("regex-on-output", "exit-code-nonzero")


class ConfigError(ValueError):
    """The harness configuration is unusable."""


class FormatError(ValueError):
    """A matrix or count file could not be parsed."""


@dataclass(frozen=True)
class ParserSpec:
    name: str
    command: str
    timeout: float = 30.0

    def argv(self, path: str) -> list[str]:
        return [a.replace(PLACEHOLDER, path) for a in shlex.split(self.command)]


@dataclass(frozen=True)
class MessageRule:
    parser: str
    message: str
    kind: str
    pattern: str = ""

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigError(f"message {self.message!r}: unknown rule kind {self.kind!r}")
        if self.kind == "regex-on-output":
            try:
                re.compile(self.pattern, re.MULTILINE)
            except re.error as e:
                raise ConfigError(f"message {self.message!r}: bad regex: {e}") from e


@dataclass(frozen=True)
class HarnessConfig:
    parsers: tuple[ParserSpec, ...]
    message_rules: tuple[MessageRule, ...]
    inversion_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "parsers", tuple(self.parsers))
        object.__setattr__(self, "message_rules", tuple(self.message_rules))
        names = [p.name for p in self.parsers]
        if len(set(names)) != len(names):
            raise ConfigError("parser names must be unique")
        for p in self.parsers:
            if p.command.count(PLACEHOLDER) != 1:
                raise ConfigError(f"parser {p.name!r}: command must contain {PLACEHOLDER} exactly once")
            if p.timeout <= 0:
                raise ConfigError(f"parser {p.name!r}: timeout must be positive")
        msgs = [r.message for r in self.message_rules]
        dupes = sorted({m for m in msgs if msgs.count(m) > 1})
        if dupes:
            raise ConfigError(f"duplicate message names: {dupes}")
        for r in self.message_rules:
            if r.parser not in names:
                raise ConfigError(f"message {r.message!r} refers to unknown parser {r.parser!r}")
        if not 0 < self.inversion_threshold <= 1:
            raise ConfigError("inversion_threshold must lie in (0, 1]")

    @property
    def universe(self) -> MessageUniverse:
        try:
            return MessageUniverse(tuple(r.message for r in self.message_rules))
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def to_json(self) -> dict:
        return {
            "parsers": [{"name": p.name, "command": p.command, "timeout": p.timeout} for p in self.parsers],
            "message_rules": [
                {"parser": r.parser, "message": r.message, "kind": r.kind, "pattern": r.pattern}
                for r in self.message_rules
            ],
            "inversion_threshold": self.inversion_threshold,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "HarnessConfig":
        try:
            parsers = [ParserSpec(p["name"], p["command"], float(p.get("timeout", 30.0))) for p in obj["parsers"]]
            rules = [
                MessageRule(r["parser"], r["message"], r["kind"], r.get("pattern", ""))
                for r in obj["message_rules"]
            ]
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed config: missing or invalid field {e}") from e
        return cls(tuple(parsers), tuple(rules), float(obj.get("inversion_threshold", 0.5)))

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def load_config(path) -> HarnessConfig:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return HarnessConfig.from_json(obj)


@dataclass(frozen=True)
class FileMessageMatrix:
    """One message pattern per file; ``provenance`` is metadata and does not take part in equality."""

    universe: MessageUniverse
    rows: tuple[tuple[str, MessagePattern], ...]
    provenance: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = tuple((str(f), p) for f, p in self.rows)
        object.__setattr__(self, "rows", rows)
        for f, p in rows:
            if p.width != self.universe.size:
                raise ValueError(f"row {f!r}: pattern width {p.width} != universe size {self.universe.size}")
        ids = [f for f, _ in rows]
        if len(set(ids)) != len(ids):
            raise ValueError("file identifiers must be unique")

    def __len__(self):
        return len(self.rows)

    def frequencies(self) -> dict[str, float]:
        n = len(self.rows)
        counts = [0] * self.universe.size
        for _, p in self.rows:
            for k in p.indices():
                counts[k] += 1
        return {name: (c / n if n else 0.0) for name, c in zip(self.universe.names, counts)}


# -- running parsers ---------------------------------------------------------

@dataclass
class _Outcome:
    output: str
    failed: bool


def _execute(argv: list[str], timeout: float) -> _Outcome:
    try:
        proc = subprocess.Popen(
            argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, stdin=subprocess.DEVNULL, start_new_session=True
        )
    except OSError as e:
        return _Outcome(f"{e}\n", True)
    try:
        out, err = proc.communicate(timeout=timeout)
        failed = proc.returncode != 0
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()
        out, err = proc.communicate()
        failed = True
    text = (out or b"").decode("utf-8", "replace") + (err or b"").decode("utf-8", "replace")
    return _Outcome(text, failed)


def _resolve(config: HarnessConfig) -> None:
    for p in config.parsers:
        argv = shlex.split(p.command)
        if not argv:
            raise ConfigError(f"parser {p.name!r}: empty command")
        if shutil.which(argv[0]) is None:
            raise ConfigError(f"parser {p.name!r}: command {argv[0]!r} not found")


def run_harness(config: HarnessConfig, files: Sequence, workers: int = 1) -> FileMessageMatrix:
    """Run every parser on every file and set each message whose rule fires."""
    _resolve(config)
    universe = config.universe
    files = [os.fspath(f) for f in files]
    rules = [
        (universe.index(r.message), r.parser, r.kind, re.compile(r.pattern, re.MULTILINE) if r.pattern else None)
        for r in config.message_rules
    ]

    def one(path: str) -> tuple[str, MessagePattern]:
        bits = 0
        for p in config.parsers:
            res = _execute(p.argv(path), p.timeout)
            for k, parser, kind, rx in rules:
                if parser != p.name:
                    continue
                if kind == "exit-code-nonzero":
                    hit = res.failed
                else:
                    hit = rx.search(res.output) is not None if rx else True
                if hit:
                    bits |= 1 << k
        return path, MessagePattern(bits, universe.size)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(one, files))
    provenance = {
        "config_digest": config.digest(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return FileMessageMatrix(universe, tuple(rows), provenance)


# -- inversion and aggregation -----------------------------------------------

def invert_messages(m: FileMessageMatrix, names: Iterable[str]) -> FileMessageMatrix:
    """Flip the named columns and toggle their ``absence-of-`` prefix."""
    idx = [m.universe.index(n) for n in names]
    flip = mask_of(idx)
    new = list(m.universe.names)
    for k in idx:
        name = new[k]
        new[k] = name[len(ABSENCE):] if name.startswith(ABSENCE) else ABSENCE + name
    try:
        universe = MessageUniverse(tuple(new))
    except ValueError as e:
        raise ValueError(f"inversion would clash with an existing message name: {e}") from e
    rows = tuple((f, MessagePattern(p.bits ^ flip, p.width)) for f, p in m.rows)
    return FileMessageMatrix(universe, rows, m.provenance)


def invert_frequent_messages(m: FileMessageMatrix, threshold: float = 0.5) -> tuple[FileMessageMatrix, list[str]]:
    """Replace every message seen in more than ``threshold`` of the files by its absence."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    n = len(m)
    counts = Counter(k for _, p in m.rows for k in iter_bits(p.bits))
    # compare counts, not float ratios, so 0.5 of an even corpus is not inverted
    names = [m.universe.names[k] for k in sorted(counts) if counts[k] > threshold * n]
    if not names:
        return m, []
    return invert_messages(m, names), names


def aggregate_counts(m: FileMessageMatrix) -> tuple[PatternPoset, CountFunction]:
    counts = Counter(p.bits for _, p in m.rows)
    poset = build_poset((MessagePattern(b, m.universe.size) for b in counts), m.universe)
    return poset, CountFunction(poset, tuple(counts[e.bits] for e in poset.elements))


def matrix_from_patterns(universe: MessageUniverse, patterns: Sequence[MessagePattern], provenance=None) -> FileMessageMatrix:
    width = len(str(max(len(patterns) - 1, 0)))
    rows = tuple((f"f{i:0{width}d}", p) for i, p in enumerate(patterns))
    return FileMessageMatrix(universe, rows, dict(provenance or {}))


# -- file formats ------------------------------------------------------------

def save_matrix(m: FileMessageMatrix, path, fmt: str | None = None) -> None:
    fmt = fmt or _format_of(path)
    with open(path, "w", newline="") as fh:
        fh.write(dumps_matrix(m, fmt))


def dumps_matrix(m: FileMessageMatrix, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["file_id", *m.universe.names])
        for f, p in m.rows:
            w.writerow([f, *(int(k in p) for k in range(m.universe.size))])
        return buf.getvalue()
    if fmt == "json":
        obj = {
            "messages": list(m.universe.names),
            "rows": [{"file": f, "on": m.universe.names_of(p)} for f, p in m.rows],
            "provenance": dict(m.provenance),
        }
        return json.dumps(obj, indent=2, sort_keys=False) + "\n"
    raise ValueError(f"unknown matrix format {fmt!r}")


def load_matrix(path, expected_messages: Sequence[str] | None = None) -> FileMessageMatrix:
    fmt = _format_of(path)
    with open(path, newline="") as fh:
        text = fh.read()
    m = loads_matrix(text, fmt, source=str(path))
    if expected_messages is not None:
        unknown = [n for n in m.universe.names if n not in set(expected_messages)]
        if unknown:
            raise FormatError(f"{path}: unknown message columns {unknown}")
    return m


def loads_matrix(text: str, fmt: str, source: str = "<string>") -> FileMessageMatrix:
    if fmt == "csv":
        return _load_csv(text, source)
    if fmt == "json":
        return _load_json_matrix(text, source)
    raise ValueError(f"unknown matrix format {fmt!r}")


def _load_csv(text: str, source: str) -> FileMessageMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{source}: empty file, expected a header line") from None
    if not header or header[0] != "file_id":
        raise FormatError(f"{source}: line 1: first column must be 'file_id'")
    try:
        universe = MessageUniverse(tuple(header[1:]))
    except ValueError as e:
        raise FormatError(f"{source}: line 1: {e}") from e
    rows = []
    for line, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise FormatError(f"{source}: line {line}: expected {len(header)} fields, got {len(rec)}")
        bits = 0
        for k, cell in enumerate(rec[1:]):
            if cell not in ("0", "1"):
                raise FormatError(f"{source}: line {line}, column {header[k + 1]!r}: expected 0 or 1, got {cell!r}")
            if cell == "1":
                bits |= 1 << k
        rows.append((rec[0], MessagePattern(bits, universe.size)))
    try:
        return FileMessageMatrix(universe, tuple(rows))
    except ValueError as e:
        raise FormatError(f"{source}: {e}") from e


def _json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{source}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def _load_json_matrix(text: str, source: str) -> FileMessageMatrix:
    obj = _json(text, source)
    if not isinstance(obj, dict) or "messages" not in obj or "rows" not in obj:
        raise FormatError(f"{source}: expected an object with 'messages' and 'rows'")
    try:
        universe = MessageUniverse(tuple(obj["messages"]))
    except ValueError as e:
        raise FormatError(f"{source}: field 'messages': {e}") from e
    rows = []
    for i, r in enumerate(obj["rows"]):
        try:
            rows.append((r["file"], universe.pattern(r["on"])))
        except (KeyError, TypeError) as e:
            raise FormatError(f"{source}: rows[{i}]: {e}") from e
    try:
        return FileMessageMatrix(universe, tuple(rows), obj.get("provenance", {}))
    except ValueError as e:
        raise FormatError(f"{source}: {e}") from e


def dumps_counts(poset: PatternPoset, f: CountFunction) -> str:
    obj = {
        "messages": list(poset.universe.names),
        "patterns": [{"on": poset.label(i), "count": f[i]} for i in range(len(poset))],
    }
    return json.dumps(obj, indent=2) + "\n"


def save_counts(poset: PatternPoset, f: CountFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_counts(poset, f))


def loads_counts(text: str, source: str = "<string>") -> tuple[PatternPoset, CountFunction]:
    obj = _json(text, source)
    if not isinstance(obj, dict) or "messages" not in obj or "patterns" not in obj:
        raise FormatError(f"{source}: expected an object with 'messages' and 'patterns'")
    try:
        universe = MessageUniverse(tuple(obj["messages"]))
    except ValueError as e:
        raise FormatError(f"{source}: field 'messages': {e}") from e
    counts: dict[int, int] = {}
    for i, rec in enumerate(obj["patterns"]):
        try:
            p = universe.pattern(rec["on"])
            c = rec["count"]
        except (KeyError, TypeError) as e:
            raise FormatError(f"{source}: patterns[{i}]: {e}") from e
        if isinstance(c, bool) or not isinstance(c, int) or c < 0:
            raise FormatError(f"{source}: patterns[{i}]: count must be a nonnegative integer, got {c!r}")
        if p.bits in counts:
            raise FormatError(f"{source}: patterns[{i}]: duplicate pattern {rec['on']}")
        counts[p.bits] = c
    poset = build_poset((MessagePattern(b, universe.size) for b in counts), universe)
    return poset, CountFunction(poset, tuple(counts[e.bits] for e in poset.elements))


def load_counts(path) -> tuple[PatternPoset, CountFunction]:
    with open(path) as fh:
        return loads_counts(fh.read(), str(path))


def _format_of(path) -> str:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".csv":
        return "csv"
    if ext == ".json":
        return "json"
    raise ValueError(f"{path}: cannot tell the format from the extension (use .csv or .json)")
