"""Exhaustive enumeration of integer monotonic decompositions for small instances.

Only usable at desk scale; the guards keep the search from blowing up.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .decomp import (
    CountFunction,
    DomainError,
    MonotonicDecomposition,
    MonotonicTerm,
    decompose,
    dialect_count_lower_bound,
    refines,
)
from .poset import MessagePattern, MessageUniverse, PatternPoset, build_poset, iter_bits

MAX_ELEMENTS = 6
MAX_TOTAL = 12


class SizeError(ValueError):
    """The instance is too large for exhaustive enumeration."""


def _monotone_terms(poset: PatternPoset, root: int, bound: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Integer monotonic decreasing functions on ``U_root`` with ``0 < g(root)`` and ``g <= bound``.

    Values are yielded as tuples aligned with the ascending element indices of ``U_root``.
    """
    up = list(iter_bits(poset.up_mask(root)))
    pos = {x: i for i, x in enumerate(up)}
    preds = [[pos[c] for c in poset.lower_covers(x) if c in pos] for x in up]
    vals = [0] * len(up)

    def rec(i):
        if i == len(up):
            yield tuple(vals)
            return
        cap = bound[up[i]]
        for p in preds[i]:
            cap = min(cap, vals[p])
        lo = 1 if i == 0 else 0
        for v in range(cap, lo - 1, -1):
            vals[i] = v
            yield from rec(i + 1)

    yield from rec(0)


def enumerate_integer_decompositions(
    f: CountFunction,
    max_terms: int,
    max_elements: int = MAX_ELEMENTS,
    max_total: int = MAX_TOTAL,
    refined_by: MonotonicDecomposition | None = None,
) -> list[MonotonicDecomposition]:
    """All irredundant integer monotonic decompositions of ``f`` with at most ``max_terms`` terms.

    Each term multiset is produced once. The search always extends the first
    element (in canonical order) that still has positive residual: any term
    covering it must be rooted there, since everything before it is exhausted.
    Terms sharing a root are emitted in non-increasing value order.

    With ``refined_by`` only decompositions that it refines are returned.
    Roots are chosen in a linear extension of the order, so a term of
    ``refined_by`` whose root has been passed must already be dominated;
    branches where it is not are cut.
    """
    if not f.is_integer():
        raise DomainError("enumeration needs integer values")
    poset = f.poset
    if len(poset) > max_elements or f.total > max_total:
        raise SizeError(
            f"instance has {len(poset)} elements and total {f.total}; "
            f"enumeration is limited to {max_elements} elements and total {max_total}"
        )
    ups = [list(iter_bits(poset.up_mask(y))) for y in range(len(poset))]
    r = list(f.values)
    found: list[MonotonicDecomposition] = []
    chosen: list[tuple[int, tuple]] = []
    targets = []
    if refined_by is not None:
        if refined_by.source != f:
            raise ValueError("refined_by decomposes a different function")
        targets = sorted((t.root, t.g) for t in refined_by.terms)

    def dominated(z, h):
        for y, vals in chosen:
            if poset.leq(y, z):
                g = dict(zip(ups[y], vals))
                if all(v <= g[x] for x, v in h.items()):
                    return True
        return False

    def settled(limit):
        # every target rooted before ``limit`` needs a dominator among the chosen terms
        return all(dominated(z, h) for z, h in targets if limit is None or z < limit)

    def rec():
        x = next((i for i, v in enumerate(r) if v), None)
        if targets and not settled(x):
            return
        if x is None:
            terms = tuple(MonotonicTerm(y, dict(zip(ups[y], vals))) for y, vals in chosen)
            found.append(MonotonicDecomposition(terms, f))
            return
        if len(chosen) >= max_terms:
            return
        last = chosen[-1][1] if chosen and chosen[-1][0] == x else None
        for vals in _monotone_terms(poset, x, r):
            if last is not None and vals > last:
                continue
            for z, v in zip(ups[x], vals):
                r[z] -= v
            chosen.append((x, vals))
            rec()
            chosen.pop()
            for z, v in zip(ups[x], vals):
                r[z] += v

    rec()
    return found


def minimal_decompositions(decomps: Sequence[MonotonicDecomposition]) -> list[MonotonicDecomposition]:
    """Members that refine no other member (reorderings of themselves aside)."""
    keys = [d.canonical() for d in decomps]
    out = []
    for i, d in enumerate(decomps):
        if not any(keys[j] != keys[i] and refines(d, e) for j, e in enumerate(decomps)):
            out.append(d)
    return out


def all_monotone_below(f: CountFunction, domain: Sequence[int]) -> Iterator[dict]:
    """Every integer monotonic decreasing ``g <= f`` on ``domain``, by plain product enumeration."""
    domain = sorted(domain)
    poset = f.poset
    pairs = [(x, y) for x in domain for y in domain if poset.less(x, y)]
    for vals in itertools.product(*(range(f[x] + 1) for x in domain)):
        g = dict(zip(domain, vals))
        if all(g[x] >= g[y] for x, y in pairs):
            yield g


def _closed(rel: set[tuple[int, int]]) -> bool:
    return all((a, d) in rel for a, b in rel for c, d in rel if b == c)


def small_posets(n: int) -> list[PatternPoset]:
    """All posets on ``n`` elements up to isomorphism, realized as pattern posets.

    Element ``i`` becomes the pattern of its down-set over ``n`` messages, so
    inclusion of patterns reproduces the order.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    perms = list(itertools.permutations(range(n)))
    seen = set()
    out = []
    for k in range(len(pairs) + 1):
        for chosen in itertools.combinations(pairs, k):
            rel = set(chosen)
            if not _closed(rel):
                continue
            canon = min(tuple(sorted((p[a], p[b]) for a, b in rel)) for p in perms)
            if canon in seen:
                continue
            seen.add(canon)
            out.append(poset_from_relation(n, rel))
    return out


def poset_from_relation(n: int, rel: set[tuple[int, int]]) -> PatternPoset:
    """Pattern poset for a strict order ``rel`` (pairs ``(a, b)`` meaning ``a < b``) on ``range(n)``."""
    patterns = []
    for i in range(n):
        down = {i} | {a for a, b in rel if b == i}
        patterns.append(MessagePattern.from_indices(down, n))
    return build_poset(patterns, MessageUniverse.anonymous(n))


@dataclass(frozen=True)
class OracleVerdict:
    greedy: MonotonicDecomposition
    minimal: bool
    witness: MonotonicDecomposition | None  # a different decomposition the greedy output refines
    root_multisets: tuple[tuple[int, ...], ...]  # one per distinct multiset among minimal decompositions
    lower_bound: int

    @property
    def shared_supports(self) -> bool:
        return len(self.root_multisets) <= 1


def oracle(
    f: CountFunction,
    max_terms: int | None = None,
    max_elements: int = MAX_ELEMENTS,
    max_total: int = MAX_TOTAL,
) -> OracleVerdict:
    """Check the greedy decomposition of a small ``f`` against exhaustive enumeration."""
    if max_terms is None:
        max_terms = int(f.total)
    d = decompose(f)
    key = d.canonical()
    above = enumerate_integer_decompositions(f, max_terms, max_elements, max_total, refined_by=d)
    witness = next((e for e in above if e.canonical() != key), None)
    everything = enumerate_integer_decompositions(f, max_terms, max_elements, max_total)
    roots = sorted({tuple(sorted(e.roots)) for e in minimal_decompositions(everything)})
    return OracleVerdict(d, witness is None, witness, tuple(roots), dialect_count_lower_bound(d))
