"""Monotonic decompositions of count functions on a pattern poset.

A count function ``f`` on a finite poset is written as a sum of terms
``1_{U_y} g`` where ``U_y`` is the upper set of a root ``y`` and ``g`` is
monotonic decreasing on it. Each term is a candidate dialect whose required
messages are the root pattern.

All arithmetic is exact: counts stay integers, anything else becomes a
``Fraction``. Internally the greedy construction rescales to integers by the
common denominator of the input values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Mapping, Sequence

from .poset import PatternPoset, iter_bits, minimal_elements


class DomainError(ValueError):
    """An operation was asked to work on an unsuitable domain or value type."""


class ContractError(ValueError):
    """A caller-supplied function violated an operation's precondition."""


class ComparisonError(ValueError):
    """Decompositions of different functions were compared."""


class CoverError(ValueError):
    """A family of sets does not cover the required support."""


def exact(value) -> int | Fraction:
    """Normalize a number to ``int`` or ``Fraction``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not counts")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else value
    if isinstance(value, str):
        return exact(Fraction(value))
    if isinstance(value, Rational):
        return exact(Fraction(value.numerator, value.denominator))
    if isinstance(value, Real):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return exact(Fraction(value))
    raise TypeError(f"not a number: {value!r}")


@dataclass(frozen=True)
class CountFunction:
    """A nonnegative value for every element of ``poset``."""

    poset: PatternPoset
    values: tuple

    def __post_init__(self):
        values = self.values
        if isinstance(values, Mapping):
            missing = [i for i in range(len(self.poset)) if i not in values]
            extra = [i for i in values if not (isinstance(i, int) and 0 <= i < len(self.poset))]
            if missing or extra:
                raise ValueError(f"values must cover exactly the poset elements (missing {missing}, extra {extra})")
            values = [values[i] for i in range(len(self.poset))]
        values = tuple(exact(v) for v in values)
        if len(values) != len(self.poset):
            raise ValueError(f"expected {len(self.poset)} values, got {len(values)}")
        negative = [i for i, v in enumerate(values) if v < 0]
        if negative:
            raise ValueError(f"negative values at elements {negative}")
        object.__setattr__(self, "values", values)

    def __getitem__(self, i: int):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    @property
    def total(self):
        return exact(sum(self.values))

    def support(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v)

    def is_integer(self) -> bool:
        return all(isinstance(v, int) for v in self.values)

    @classmethod
    def from_patterns(cls, poset: PatternPoset, counts: Mapping) -> "CountFunction":
        """Build from a pattern -> value mapping; absent elements get 0."""
        values = [0] * len(poset)
        for pattern, v in counts.items():
            values[poset.index_of(pattern)] = v
        return cls(poset, tuple(values))


@dataclass(frozen=True)
class MonotonicTerm:
    """One term ``1_{U_root} g``; ``g`` is stored on the upper set of ``root`` only."""

    root: int
    g: Mapping[int, int | Fraction]

    @property
    def root_value(self):
        return self.g[self.root]

    def key(self) -> tuple:
        return (self.root, tuple(sorted(self.g.items())))

    def is_zero(self) -> bool:
        return not any(self.g.values())

    def support(self) -> frozenset[int]:
        return frozenset(x for x, v in self.g.items() if v)


@dataclass(frozen=True)
class MonotonicDecomposition:
    terms: tuple[MonotonicTerm, ...]
    source: CountFunction = field(repr=False)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def roots(self) -> list[int]:
        return [t.root for t in self.terms]

    def reconstruct(self) -> tuple:
        out = [0] * len(self.source.poset)
        for t in self.terms:
            for x, v in t.g.items():
                out[x] += v
        return tuple(exact(v) for v in out)

    def canonical(self) -> tuple:
        """Order-independent identity of the term multiset."""
        return tuple(sorted(t.key() for t in self.terms))

    def same_terms(self, other: "MonotonicDecomposition") -> bool:
        return self.canonical() == other.canonical()


# -- internal passes over integer-scaled values ------------------------------

def _is_monotone_on(poset: PatternPoset, g: Mapping[int, object]) -> bool:
    for y in g:
        for x in iter_bits(poset.below_mask(y)):
            if x in g and g[x] < g[y]:
                return False
    return True


def _violation_mask(poset: PatternPoset, values: Sequence) -> int:
    # floor[y] = min of values strictly below y, via the Hasse diagram in index order
    n = len(values)
    floor = [None] * n
    mask = 0
    for y in range(n):
        lo = None
        for c in poset.lower_covers(y):
            v = values[c] if floor[c] is None else min(values[c], floor[c])
            if lo is None or v < lo:
                lo = v
        floor[y] = lo
        if lo is not None and lo < values[y]:
            mask |= 1 << y
    return mask


def _layers(poset: PatternPoset, domain: set[int]) -> list[list[int]]:
    """Split ``domain`` into successive layers of minimal elements."""
    pending = {y: sum(1 for c in poset.lower_covers(y) if c in domain) for y in domain}
    layer = sorted(y for y, k in pending.items() if k == 0)
    layers = []
    while layer:
        layers.append(layer)
        nxt = []
        for x in layer:
            for z in poset.upper_covers(x):
                if z in pending:
                    pending[z] -= 1
                    if pending[z] == 0:
                        nxt.append(z)
        layer = sorted(nxt)
    return layers


def _lower_bound(poset: PatternPoset, values: Sequence, domain: set[int]) -> dict:
    g = {}
    for layer in _layers(poset, domain):
        for m in layer:
            best = values[m]
            for x in poset.lower_covers(m):
                # every x < m in the domain is reachable through covers inside the domain
                if x in domain and g[x] < best:
                    best = g[x]
            g[m] = best
    return g


def _scale(values: Sequence) -> int:
    scale = 1
    for v in values:
        if isinstance(v, Fraction):
            scale = scale * v.denominator // math.gcd(scale, v.denominator)
    return scale


def _unscale(v: int, scale: int):
    return v if scale == 1 else exact(Fraction(v, scale))


# -- public operations --------------------------------------------------------

def count_violations(f: CountFunction) -> frozenset[int]:
    """Elements ``y`` with some ``x < y`` where ``f(x) < f(y)``."""
    return frozenset(iter_bits(_violation_mask(f.poset, f.values)))


def is_monotone_decreasing(f: CountFunction) -> bool:
    return _violation_mask(f.poset, f.values) == 0


def max_monotonic_lower_bound(f: CountFunction, domain: Iterable[int]) -> dict:
    """The largest monotonic decreasing ``g <= f`` on an upward-closed ``domain``.

    Built layer by layer: minimal elements take ``f`` itself, every later
    element takes ``min(f(m), g(x) for x < m)``.
    """
    poset = f.poset
    domain = set(domain)
    for y in domain:
        poset._check_index(y)
    if not poset.is_upward_closed(domain):
        raise DomainError("domain is not upward closed")
    return _lower_bound(poset, f.values, domain)


def pointwise_max(g1: Mapping, g2: Mapping, f: CountFunction) -> dict:
    """Pointwise maximum of two monotonic lower bounds of ``f`` on a common domain."""
    if set(g1) != set(g2):
        raise ContractError("g1 and g2 are defined on different domains")
    for name, g in (("g1", g1), ("g2", g2)):
        if not _is_monotone_on(f.poset, g):
            raise ContractError(f"{name} is not monotonic decreasing")
        over = [x for x, v in g.items() if v > f[x]]
        if over:
            raise ContractError(f"{name} exceeds f at elements {sorted(over)}")
    return {x: max(g1[x], g2[x]) for x in g1}


def decompose(f: CountFunction, order: Sequence[int] | None = None) -> MonotonicDecomposition:
    """Greedy monotonic decomposition of ``f``.

    While the residual is not monotonic decreasing, take a minimal violating
    element ``y`` and peel off the maximal monotonic lower bound of the
    residual on ``U_y``. Once the residual is monotonic, split it over the
    minimal elements of its support, each taking what the earlier ones left.

    ``order`` is a preference list of element indices used to break ties
    between candidate roots; by default the canonical element order is used.
    Terms come out in order of discovery and none of them is zero.
    """
    poset = f.poset
    n = len(poset)
    rank = list(range(n))
    if order is not None:
        order = list(order)
        if sorted(order) != list(range(n)):
            raise ValueError("order must be a permutation of the element indices")
        for pos, i in enumerate(order):
            rank[i] = pos
    scale = _scale(f.values)
    r = [int(v * scale) for v in f.values]

    found: list[tuple[int, dict]] = []
    viol = _violation_mask(poset, r)
    while viol:
        y = min(minimal_elements(poset, iter_bits(viol)), key=rank.__getitem__)
        domain = set(iter_bits(poset.up_mask(y)))
        g = _lower_bound(poset, r, domain)
        assert g[y] == r[y], "extracted term must exhaust the residual at its root"
        for x, v in g.items():
            r[x] -= v
        nxt = _violation_mask(poset, r)
        assert nxt.bit_count() < viol.bit_count(), "extraction must remove violations"
        found.append((y, g))
        viol = nxt

    roots = sorted(minimal_elements(poset, (i for i in range(n) if r[i])), key=rank.__getitem__)
    covered = 0
    for y in roots:
        up = poset.up_mask(y)
        fresh = up & ~covered
        found.append((y, {x: (r[x] if fresh >> x & 1 else 0) for x in iter_bits(up)}))
        covered |= up

    terms = tuple(
        MonotonicTerm(y, {x: _unscale(v, scale) for x, v in g.items()}) for y, g in found
    )
    return drop_zero_terms(MonotonicDecomposition(terms, f))


def refines(d1: MonotonicDecomposition, d2: MonotonicDecomposition) -> bool:
    """Whether every term of ``d1`` sits under some term of ``d2`` in support and value."""
    if d1.source != d2.source:
        raise ComparisonError("decompositions have different source functions")
    poset = d1.source.poset
    for h in d1.terms:
        if not any(
            poset.leq(g.root, h.root) and all(v <= g.g[x] for x, v in h.g.items())
            for g in d2.terms
        ):
            return False
    return True


def is_irredundant(d: MonotonicDecomposition) -> bool:
    return not any(t.is_zero() for t in d.terms)


def drop_zero_terms(d: MonotonicDecomposition) -> MonotonicDecomposition:
    return MonotonicDecomposition(tuple(t for t in d.terms if not t.is_zero()), d.source)


def irredundant_cover(supports: Sequence[Iterable[int]], target: Iterable[int]) -> list[frozenset[int]]:
    """Drop sets contained in the union of the others until none is redundant.

    Sets are scanned in the given order and the scan restarts after every
    removal. ``target`` is the set that must stay covered.
    """
    sets = [frozenset(s) for s in supports]
    target = frozenset(target)
    union = frozenset().union(*sets)
    if not target <= union:
        raise CoverError(f"elements {sorted(target - union)} are not covered")
    changed = True
    while changed:
        changed = False
        for i, s in enumerate(sets):
            rest = frozenset().union(*(t for j, t in enumerate(sets) if j != i))
            if s <= rest:
                del sets[i]
                changed = True
                break
    return sets


def dialect_count_lower_bound(d: MonotonicDecomposition) -> int:
    """Size of the irredundant cover formed from the terms' upper sets."""
    poset = d.source.poset
    supports = [poset.upper_set(t.root) for t in d.terms]
    return len(irredundant_cover(supports, d.source.support()))


def max_refined_decomposition(f: CountFunction) -> MonotonicDecomposition:
    """One indicator term ``1_{U_y} 1_{{y}}`` per unit of ``f(y)``."""
    if not f.is_integer():
        raise DomainError("the maximally refined decomposition needs integer values")
    terms = []
    for y, count in enumerate(f.values):
        if count:
            g = {x: 0 for x in iter_bits(f.poset.up_mask(y))}
            g[y] = 1
            terms.extend(MonotonicTerm(y, dict(g)) for _ in range(count))
    return MonotonicDecomposition(tuple(terms), f)


def check_decomposition(d: MonotonicDecomposition) -> None:
    """Raise ``AssertionError`` unless ``d`` is a valid monotonic decomposition of its source."""
    poset = d.source.poset
    for t in d.terms:
        assert set(t.g) == set(iter_bits(poset.up_mask(t.root))), f"term at {t.root} not defined on its upper set"
        assert all(v >= 0 for v in t.g.values()), f"term at {t.root} is negative"
        assert _is_monotone_on(poset, t.g), f"term at {t.root} is not monotonic decreasing"
    assert d.reconstruct() == d.source.values, "terms do not sum to the source function"
