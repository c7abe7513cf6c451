"""Message patterns as integer bitsets and the finite poset they form under inclusion."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class WidthMismatchError(ValueError):
    """Patterns built against universes of different sizes were mixed."""


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class MessageUniverse:
    """Ordered, duplicate-free list of message names."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        for name in names:
            if not isinstance(name, str) or not name:
                raise ValueError(f"message names must be non-empty strings, got {name!r}")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate message names: {dupes}")

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown message {name!r}") from None

    def pattern(self, names: Iterable[str] = ()) -> "MessagePattern":
        return MessagePattern.from_indices((self.index(n) for n in names), self.size)

    def names_of(self, pattern: "MessagePattern") -> list[str]:
        if pattern.width != self.size:
            raise WidthMismatchError(
                f"pattern width {pattern.width} does not match universe size {self.size}"
            )
        return [self.names[i] for i in pattern.indices()]

    @classmethod
    def anonymous(cls, size: int) -> "MessageUniverse":
        return cls(tuple(f"m{i}" for i in range(size)))


@dataclass(frozen=True)
class MessagePattern:
    """The set of messages one file elicited, as a fixed-width bitset."""

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"bits {self.bits:#x} do not fit in width {self.width}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], width: int) -> "MessagePattern":
        indices = list(indices)
        for i in indices:
            if not 0 <= i < width:
                raise IndexError(f"message index {i} outside universe of size {width}")
        return cls(mask_of(indices), width)

    def indices(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.bits))

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def _check(self, other: "MessagePattern"):
        if self.width != other.width:
            raise WidthMismatchError(f"widths differ: {self.width} vs {other.width}")

    def issubset(self, other: "MessagePattern") -> bool:
        self._check(other)
        return not (self.bits & ~other.bits)

    def __le__(self, other: "MessagePattern") -> bool:
        return self.issubset(other)

    def __lt__(self, other: "MessagePattern") -> bool:
        return self.issubset(other) and self.bits != other.bits

    def __contains__(self, index: int) -> bool:
        return bool(self.bits >> index & 1)

    def sort_key(self) -> tuple:
        # canonical order: fewer messages first, then lexicographic on the on-message indices
        return (self.popcount, self.indices())


def _packed(patterns: Sequence[MessagePattern], width: int) -> np.ndarray:
    chunks = max(1, -(-width // 64))
    out = np.zeros((len(patterns), chunks), dtype=np.uint64)
    lo = (1 << 64) - 1
    for row, p in enumerate(patterns):
        b = p.bits
        for c in range(chunks):
            out[row, c] = (b >> (64 * c)) & lo
    return out


class PatternPoset:
    """Observed message patterns ordered by inclusion.

    Elements are deduplicated and kept in canonical order (popcount, then
    on-message indices), so every strict predecessor of element ``i`` has an
    index smaller than ``i``. Instances are immutable after construction.
    """

    def __init__(self, universe: MessageUniverse, elements: Sequence[MessagePattern]):
        self.universe = universe
        self.elements: tuple[MessagePattern, ...] = tuple(elements)
        self._index = {p.bits: i for i, p in enumerate(self.elements)}
        self._below, self._lower_covers = self._compute_order()
        n = len(self.elements)
        above = [0] * n
        upper_covers: list[list[int]] = [[] for _ in range(n)]
        for y in range(n):
            bit = 1 << y
            for x in iter_bits(self._below[y]):
                above[x] |= bit
            for x in self._lower_covers[y]:
                upper_covers[x].append(y)
        self._above = above
        self._lower_covers = tuple(tuple(c) for c in self._lower_covers)
        self._upper_covers = tuple(tuple(c) for c in upper_covers)
        self.hasse_edges: tuple[tuple[int, int], ...] = tuple(
            (x, y) for y in range(n) for x in self._lower_covers[y]
        )

    def _compute_order(self):
        n = len(self.elements)
        below = [0] * n
        covers: list[list[int]] = [[] for _ in range(n)]
        if n == 0:
            return below, covers
        packed = _packed(self.elements, self.universe.size)
        for y in range(1, n):
            # x ⊆ y  <=>  x & ~y == 0 in every chunk; candidates have smaller index
            head = packed[:y]
            sub = np.all((head & ~packed[y]) == 0, axis=1)
            idx = np.flatnonzero(sub)
            if not len(idx):
                continue
            below[y] = mask_of(idx.tolist())
            shadow = 0
            for x in reversed(idx.tolist()):
                if not shadow >> x & 1:
                    covers[y].append(x)
                    shadow |= below[x]
            covers[y].reverse()
        return below, covers

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternPoset):
            return NotImplemented
        return self.universe == other.universe and self.elements == other.elements

    def __hash__(self) -> int:
        return hash((self.universe, self.elements))

    def __repr__(self) -> str:
        return f"PatternPoset({len(self)} elements, {len(self.hasse_edges)} edges)"

    def index_of(self, pattern: MessagePattern) -> int:
        if pattern.width != self.universe.size:
            raise WidthMismatchError(
                f"pattern width {pattern.width} does not match universe size {self.universe.size}"
            )
        try:
            return self._index[pattern.bits]
        except KeyError:
            raise KeyError(f"pattern {self.universe.names_of(pattern)} is not an element") from None

    def _check_index(self, y: int):
        if not isinstance(y, (int, np.integer)) or not 0 <= y < len(self.elements):
            raise IndexError(f"element index {y!r} out of range for {len(self)} elements")

    def leq(self, x: int, y: int) -> bool:
        return x == y or bool(self._below[y] >> x & 1)

    def less(self, x: int, y: int) -> bool:
        return bool(self._below[y] >> x & 1)

    def below_mask(self, y: int) -> int:
        """Bitmask over element indices of the elements strictly below ``y``."""
        return self._below[y]

    def above_mask(self, y: int) -> int:
        return self._above[y]

    def up_mask(self, y: int) -> int:
        return self._above[y] | (1 << y)

    def lower_covers(self, y: int) -> tuple[int, ...]:
        return self._lower_covers[y]

    def upper_covers(self, y: int) -> tuple[int, ...]:
        return self._upper_covers[y]

    def upper_set(self, y: int) -> frozenset[int]:
        self._check_index(y)
        return frozenset(iter_bits(self.up_mask(y)))

    def is_upward_closed(self, subset: Iterable[int]) -> bool:
        subset = set(subset)
        return all(z in subset for x in subset for z in self._upper_covers[x])

    def label(self, y: int) -> list[str]:
        return self.universe.names_of(self.elements[y])


def build_poset(patterns: Iterable[MessagePattern], universe: MessageUniverse | None = None) -> PatternPoset:
    """Deduplicate ``patterns`` and order them by inclusion."""
    patterns = list(patterns)
    widths = {p.width for p in patterns}
    if universe is not None:
        widths.add(universe.size)
    if len(widths) > 1:
        raise WidthMismatchError(f"patterns have mixed widths {sorted(widths)}")
    if universe is None:
        universe = MessageUniverse.anonymous(widths.pop() if widths else 0)
    unique = {p.bits: p for p in patterns}
    elements = sorted(unique.values(), key=MessagePattern.sort_key)
    return PatternPoset(universe, elements)


def upper_set(p: PatternPoset, y: int) -> frozenset[int]:
    return p.upper_set(y)


def minimal_elements(p: PatternPoset, subset: Iterable[int]) -> frozenset[int]:
    """Elements of ``subset`` with no strictly smaller element inside ``subset``."""
    subset = set(subset)
    for y in subset:
        p._check_index(y)
    smask = mask_of(subset)
    return frozenset(y for y in subset if not p.below_mask(y) & smask)
