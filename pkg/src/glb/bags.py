"""Splittable, mergeable task containers.

Bags hold pending work items.  A bag must know how to give away part of
itself (``split``), absorb a bag received from another place (``merge``),
and round-trip through bytes so places never share mutable state.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional

from .errors import InvalidConfigError

_U32 = struct.Struct("<I")
_U64X2 = struct.Struct("<QQ")


class ListBag:
    """Ordered list of fixed-width items; split gives away the trailing half.

    ``item_format`` is a struct format for one item (default signed 64-bit,
    little-endian), used by the byte codec.
    """

    def __init__(self, items: Optional[Iterable] = None, item_format: str = "<q"):
        self.items = list(items) if items is not None else []
        self.item_format = item_format

    def size(self) -> int:
        return len(self.items)

    def add(self, item) -> None:
        self.items.append(item)

    def split(self) -> Optional["ListBag"]:
        """Remove and return the trailing floor(size/2) items, or None if size < 2."""
        n = len(self.items)
        if n < 2:
            return None
        give = n // 2
        tail = self.items[-give:]
        del self.items[-give:]
        return ListBag(tail, self.item_format)

    def merge(self, incoming: "ListBag") -> None:
        self.items.extend(incoming.items)

    def to_bytes(self) -> bytes:
        s = struct.Struct(self.item_format)
        parts = [_U32.pack(len(self.items))]
        parts.extend(s.pack(x) for x in self.items)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes, item_format: str = "<q") -> "ListBag":
        s = struct.Struct(item_format)
        (count,) = _U32.unpack_from(data, 0)
        items = [s.unpack_from(data, 4 + i * s.size)[0] for i in range(count)]
        return cls(items, item_format)

    def __repr__(self) -> str:
        return f"ListBag({self.items!r})"


@dataclass(frozen=True)
class Interval:
    """Half-open vertex range [low, high); never empty."""

    low: int
    high: int

    def __post_init__(self):
        if not (0 <= self.low < self.high):
            raise InvalidConfigError(f"invalid interval [{self.low}, {self.high})")

    @property
    def size(self) -> int:
        return self.high - self.low


class SplitStrategy(Enum):
    SUFFIX_BALANCED = "suffix-balanced"
    EACH_HALVED = "each-halved"


class IntervalBag:
    """Bag of disjoint vertex intervals with pluggable split strategy.

    Merging is O(number of incoming intervals): intervals are moved, never
    re-enumerated element by element.  ``moves`` counts interval moves done
    by ``merge`` so tests can bound the merge cost.
    """

    def __init__(
        self,
        intervals: Iterable[Interval] = (),
        strategy: SplitStrategy = SplitStrategy.SUFFIX_BALANCED,
    ):
        self._intervals: deque[Interval] = deque()
        self.strategy = strategy
        self.total = 0
        self.moves = 0
        for iv in intervals:
            self.push(iv)

    def size(self) -> int:
        return self.total

    def interval_count(self) -> int:
        return len(self._intervals)

    def intervals(self) -> Iterator[Interval]:
        return iter(self._intervals)

    def push(self, interval: Interval) -> None:
        if not isinstance(interval, Interval):
            interval = Interval(*interval)
        self._intervals.append(interval)
        self.total += interval.size

    def pop(self, k: int) -> list[int]:
        """Remove and return up to k vertices taken from the front."""
        out: list[int] = []
        while k > 0 and self._intervals:
            iv = self._intervals[0]
            take = min(k, iv.size)
            out.extend(range(iv.low, iv.low + take))
            if take == iv.size:
                self._intervals.popleft()
            else:
                self._intervals[0] = Interval(iv.low + take, iv.high)
            self.total -= take
            k -= take
        return out

    def split(self) -> Optional["IntervalBag"]:
        if self.strategy is SplitStrategy.SUFFIX_BALANCED:
            return self._split_suffix_balanced()
        return self._split_each_halved()

    def _split_suffix_balanced(self) -> Optional["IntervalBag"]:
        # Give away a suffix holding exactly floor(total/2) vertices,
        # cutting the boundary interval if needed.
        if self.total < 2:
            return None
        target = self.total // 2
        given = IntervalBag(strategy=self.strategy)
        taken: deque[Interval] = deque()
        acc = 0
        while acc < target:
            iv = self._intervals.pop()
            if acc + iv.size <= target:
                taken.appendleft(iv)
                acc += iv.size
            else:
                cut = iv.high - (target - acc)
                self._intervals.append(Interval(iv.low, cut))
                taken.appendleft(Interval(cut, iv.high))
                acc = target
        given._intervals.extend(taken)
        given.total = target
        self.total -= target
        return given

    def _split_each_halved(self) -> Optional["IntervalBag"]:
        # Halve every interval of size >= 2; singletons stay local.
        if all(iv.size < 2 for iv in self._intervals):
            return None
        given = IntervalBag(strategy=self.strategy)
        kept: deque[Interval] = deque()
        for iv in self._intervals:
            if iv.size < 2:
                kept.append(iv)
                continue
            mid = iv.low + iv.size // 2
            kept.append(Interval(iv.low, mid))
            given.push(Interval(mid, iv.high))
        self._intervals = kept
        self.total -= given.total
        return given

    def merge(self, incoming: "IntervalBag") -> None:
        if incoming.strategy is not self.strategy:
            raise InvalidConfigError(
                f"cannot merge {incoming.strategy.value} bag into {self.strategy.value} bag"
            )
        moved = len(incoming._intervals)
        self._intervals.extend(incoming._intervals)
        self.total += incoming.total
        self.moves += moved

    def to_bytes(self) -> bytes:
        parts = [_U32.pack(len(self._intervals))]
        parts.extend(_U64X2.pack(iv.low, iv.high) for iv in self._intervals)
        return b"".join(parts)

    @classmethod
    def from_bytes(
        cls, data: bytes, strategy: SplitStrategy = SplitStrategy.SUFFIX_BALANCED
    ) -> "IntervalBag":
        (count,) = _U32.unpack_from(data, 0)
        bag = cls(strategy=strategy)
        for i in range(count):
            low, high = _U64X2.unpack_from(data, 4 + 16 * i)
            bag.push(Interval(low, high))
        return bag

    def __repr__(self) -> str:
        body = ", ".join(f"[{iv.low},{iv.high})" for iv in self._intervals)
        return f"IntervalBag({{{body}}}, {self.strategy.value})"
