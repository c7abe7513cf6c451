"""Independent-message mixture model of dialects, its sampler and the expected counts it induces."""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .decomp import CountFunction, exact
from .poset import MessagePattern, MessageUniverse, PatternPoset, WidthMismatchError, iter_bits, mask_of

RNG_NAME = "numpy.random.PCG64"
HALF = Fraction(1, 2)


class ValidationError(ValueError):
    """A model spec violates one of its invariants; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _prob(value, where: str) -> Fraction:
    try:
        v = Fraction(exact(value))
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValidationError(where, f"not a probability: {value!r}") from e
    return v


@dataclass(frozen=True)
class DialectSpec:
    """Required messages always occur; every other message occurs independently with its marginal."""

    required: MessagePattern
    marginals: Mapping[int, Fraction] = field(default_factory=dict)
    weight: Fraction = Fraction(1)

    def __post_init__(self):
        margs = {}
        for k, v in dict(self.marginals).items():
            where = f"marginals[{k}]"
            if not isinstance(k, int) or not 0 <= k < self.required.width:
                raise ValidationError(where, "message index outside the universe")
            if k in self.required:
                raise ValidationError(where, "required messages carry no marginal")
            p = _prob(v, where)
            if not 0 <= p < HALF:
                raise ValidationError(where, f"marginal {p} must lie in [0, 1/2)")
            margs[k] = p
        object.__setattr__(self, "marginals", dict(sorted(margs.items())))
        w = _prob(self.weight, "weight")
        if not 0 < w <= 1:
            raise ValidationError("weight", f"weight {w} must lie in (0, 1]")
        object.__setattr__(self, "weight", w)

    @property
    def width(self) -> int:
        return self.required.width

    def marginal(self, k: int) -> Fraction:
        return self.marginals.get(k, Fraction(0))

    def free_mask(self) -> int:
        """Messages that can occur beyond the required ones."""
        return mask_of(k for k, p in self.marginals.items() if p)


@dataclass(frozen=True)
class MixtureSpec:
    universe: MessageUniverse
    dialects: tuple[DialectSpec, ...]

    def __post_init__(self):
        dialects = tuple(self.dialects)
        object.__setattr__(self, "dialects", dialects)
        if not dialects:
            raise ValidationError("dialects", "at least one dialect is needed")
        for i, d in enumerate(dialects):
            if d.width != self.universe.size:
                raise ValidationError(f"dialects[{i}].required", "width does not match the universe")
        total = sum((d.weight for d in dialects), Fraction(0))
        if total != 1:
            raise ValidationError("weight", f"dialect weights sum to {total}, not 1")
        seen = {}
        for i, d in enumerate(dialects):
            if d.required.bits in seen:
                raise ValidationError(
                    f"dialects[{i}].required", f"same required set as dialects[{seen[d.required.bits]}]"
                )
            seen[d.required.bits] = i

    @property
    def width(self) -> int:
        return self.universe.size

    def to_json(self) -> dict:
        names = self.universe.names
        return {
            "messages": list(names),
            "dialects": [
                {
                    "required": self.universe.names_of(d.required),
                    "marginals": {names[k]: str(p) for k, p in d.marginals.items()},
                    "weight": str(d.weight),
                }
                for d in self.dialects
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "MixtureSpec":
        if not isinstance(obj, Mapping):
            raise ValidationError("spec", "expected a JSON object")
        for key in ("messages", "dialects"):
            if key not in obj:
                raise ValidationError(key, "missing")
        try:
            universe = MessageUniverse(tuple(obj["messages"]))
        except ValueError as e:
            raise ValidationError("messages", str(e)) from e
        dialects = []
        for i, d in enumerate(obj["dialects"]):
            where = f"dialects[{i}]"
            try:
                required = universe.pattern(d.get("required", []))
            except KeyError as e:
                raise ValidationError(f"{where}.required", str(e)) from e
            margs = {}
            for name, p in d.get("marginals", {}).items():
                try:
                    margs[universe.index(name)] = p
                except KeyError as e:
                    raise ValidationError(f"{where}.marginals", str(e)) from e
            try:
                dialects.append(DialectSpec(required, margs, d.get("weight", 1)))
            except ValidationError as e:
                raise ValidationError(f"{where}.{e.field}", str(e).split(": ", 1)[1]) from e
        return cls(universe, tuple(dialects))

    def digest(self) -> str:
        return spec_digest(self)


def spec_digest(spec: MixtureSpec) -> str:
    blob = json.dumps(spec.to_json(), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def load_spec(path) -> MixtureSpec:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError("spec", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return MixtureSpec.from_json(obj)


def dump_spec(spec: MixtureSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_json(), fh, indent=2)
        fh.write("\n")


def pattern_probability(spec: DialectSpec, pattern: MessagePattern) -> Fraction:
    """Probability that a file of this dialect elicits exactly ``pattern``."""
    if pattern.width != spec.width:
        raise WidthMismatchError(f"pattern width {pattern.width} does not match {spec.width}")
    if spec.required.bits & ~pattern.bits:
        return Fraction(0)
    p = Fraction(1)
    for k in range(spec.width):
        if k in spec.required:
            continue
        q = spec.marginal(k)
        p *= q if k in pattern else 1 - q
        if not p:
            break
    return p


def mixture_probability(spec: MixtureSpec, pattern: MessagePattern) -> Fraction:
    return sum((d.weight * pattern_probability(d, pattern) for d in spec.dialects), Fraction(0))


def dialect_support(spec: DialectSpec) -> list[MessagePattern]:
    """Patterns of positive probability for one dialect."""
    free = list(iter_bits(spec.free_mask()))
    out = []
    for k in range(len(free) + 1):
        for extra in itertools.combinations(free, k):
            out.append(MessagePattern(spec.required.bits | mask_of(extra), spec.width))
    return out


def support_patterns(spec: MixtureSpec) -> list[MessagePattern]:
    """Every pattern with positive mixture probability, in canonical order."""
    seen = {}
    for d in spec.dialects:
        for p in dialect_support(d):
            seen[p.bits] = p
    return sorted(seen.values(), key=MessagePattern.sort_key)


def expected_count_function(spec: MixtureSpec, n_files: int, poset: PatternPoset) -> CountFunction:
    """``n_files`` times the mixture law, exactly, on the elements of ``poset``."""
    if poset.universe.size != spec.width:
        raise WidthMismatchError("poset and spec use universes of different sizes")
    return CountFunction(poset, tuple(n_files * mixture_probability(spec, x) for x in poset.elements))


def sample_corpus(spec: MixtureSpec, n_files: int, seed: int) -> tuple[list[MessagePattern], dict]:
    """Draw ``n_files`` independent patterns; also returns provenance for replay."""
    if n_files < 0:
        raise ValueError("n_files must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    width = spec.width
    weights = np.array([float(d.weight) for d in spec.dialects])
    which = rng.choice(len(spec.dialects), size=n_files, p=weights / weights.sum())
    margs = np.array([[float(d.marginal(k)) for k in range(width)] for d in spec.dialects]).reshape(
        len(spec.dialects), width
    )
    draws = rng.random((n_files, width)) < margs[which]
    place = [1 << k for k in range(width)]
    out = []
    for row, a in zip(draws, which):
        bits = spec.dialects[a].required.bits
        for k in np.flatnonzero(row):
            bits |= place[k]
        out.append(MessagePattern(bits, width))
    provenance = {"rng": RNG_NAME, "seed": int(seed), "spec_digest": spec_digest(spec), "n_files": int(n_files)}
    return out, provenance


def _incomparable(a: int, b: int) -> bool:
    return bool(a & ~b) and bool(b & ~a)


def random_mixture_spec(
    rng: np.random.Generator,
    n_dialects: tuple[int, int] = (2, 5),
    n_messages: tuple[int, int] = (6, 12),
    required_size: tuple[int, int] = (1, 3),
    max_marginal: Fraction = Fraction(2, 5),
    marginal_step: Fraction = Fraction(1, 20),
) -> MixtureSpec:
    """Random spec with pairwise incomparable required sets and marginals on a grid up to ``max_marginal``."""
    width = int(rng.integers(n_messages[0], n_messages[1] + 1))
    k = int(rng.integers(n_dialects[0], n_dialects[1] + 1))
    required: list[int] = []
    while len(required) < k:
        size = int(rng.integers(required_size[0], required_size[1] + 1))
        bits = mask_of(rng.choice(width, size=size, replace=False).tolist())
        if all(_incomparable(bits, r) for r in required):
            required.append(bits)
    top = int(max_marginal / marginal_step)
    raw = [int(rng.integers(1, 5)) for _ in range(k)]
    dialects = []
    for bits, w in zip(required, raw):
        margs = {
            j: marginal_step * int(rng.integers(0, top + 1)) for j in range(width) if not bits >> j & 1
        }
        dialects.append(DialectSpec(MessagePattern(bits, width), margs, Fraction(w, sum(raw))))
    return MixtureSpec(MessageUniverse.anonymous(width), tuple(dialects))
