"""Unbalanced Tree Search workload.

Tree nodes are SHA-1 descriptors; a node's child is the digest of the
parent digest concatenated with the child index (4 bytes big-endian), so
any subtree can be regenerated from its descriptor alone.  The number of
children follows a geometric law with mean b0 below the depth cutoff d.
The task bag stores (descriptor, depth, low, high) nodes where [low, high)
are the still-unexplored child indices; splitting halves every node's
range, nodes with a single child stay local.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

from .core import TaskQueue
from .errors import InvalidConfigError

_BE32 = struct.Struct(">I")
_U32 = struct.Struct("<I")
_NODE = struct.Struct("<20sIII")


@dataclass(frozen=True)
class UtsParams:
    b0: float
    r: int
    d: int

    def __post_init__(self):
        if not self.b0 > 1:
            raise InvalidConfigError(f"b0 must be > 1, got {self.b0}")
        if self.d < 1:
            raise InvalidConfigError(f"depth cutoff must be >= 1, got {self.d}")
        if not 0 <= self.r < 2**32:
            raise InvalidConfigError("root seed must fit in 32 unsigned bits")

    @property
    def log_q(self) -> float:
        # ln(1-p) with p = 1/(1+b0); the geometric sampler's denominator.
        return math.log1p(-1.0 / (1.0 + self.b0))


def root_descriptor(r: int) -> bytes:
    return hashlib.sha1(_BE32.pack(r)).digest()


def spawn_child(parent: bytes, index: int) -> bytes:
    return hashlib.sha1(parent + _BE32.pack(index)).digest()


def child_count(desc: bytes, depth: int, params: UtsParams) -> int:
    """Geometric branching: floor(ln(1-v)/ln(1-p)) from the digest's head.

    v is the first 4 digest bytes as a big-endian fraction of 2^32; the
    law has mean b0.  Depths at or beyond the cutoff have no children.
    """
    if depth >= params.d:
        return 0
    v = int.from_bytes(desc[:4], "big")
    if v == 0:
        return 0
    return int(math.log1p(-v * 2.0**-32) / params.log_q)


class UtsBag:
    """Array of [descriptor, depth, low, high] nodes; size counts children."""

    __slots__ = ("nodes", "total")

    def __init__(self, nodes=None):
        self.nodes: list[list] = []
        self.total = 0
        if nodes:
            for desc, depth, low, high in nodes:
                self.push(desc, depth, low, high)

    def push(self, desc: bytes, depth: int, low: int, high: int) -> None:
        if not 0 <= low < high:
            raise InvalidConfigError(f"invalid child range [{low}, {high})")
        self.nodes.append([desc, depth, low, high])
        self.total += high - low

    def size(self) -> int:
        return self.total

    def split(self):
        """Halve every node's unexplored range; None if no node has >= 2.

        Nodes keep [low, mid) and give away [mid, high); single-child
        nodes are cheaper to expand locally than to ship.
        """
        given = UtsBag()
        for node in self.nodes:
            span = node[3] - node[2]
            if span >= 2:
                mid = node[2] + span // 2
                given.push(node[0], node[1], mid, node[3])
                node[3] = mid
        if not given.nodes:
            return None
        self.total -= given.total
        return given

    def merge(self, incoming: "UtsBag") -> None:
        self.nodes.extend(incoming.nodes)
        self.total += incoming.total

    def to_bytes(self) -> bytes:
        parts = [_U32.pack(len(self.nodes))]
        parts.extend(_NODE.pack(n[0], n[1], n[2], n[3]) for n in self.nodes)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "UtsBag":
        (count,) = _U32.unpack_from(data, 0)
        bag = cls()
        for i in range(count):
            desc, depth, low, high = _NODE.unpack_from(data, 4 + _NODE.size * i)
            bag.push(desc, depth, low, high)
        return bag


class UtsQueue(TaskQueue):
    """Counts tree nodes: process(n) expands up to n children off the tail."""

    block_items = 8192

    def __init__(self, params: UtsParams):
        super().__init__(UtsBag())
        self.params = params
        self._log_q = params.log_q

    def process(self, n: int) -> bool:
        return self._expand(n) == n

    def process_block(self, n: int, max_items: int, mail_flags, place: int) -> tuple[int, bool]:
        done = 0
        while done < max_items:
            if mail_flags[place]:
                break
            step = self._expand(min(n, max_items - done))
            done += step
            if step == 0:
                break
        return done, bool(self.bag.nodes)

    def _expand(self, limit: int) -> int:
        nodes = self.bag.nodes
        params = self.params
        d = params.d
        log_q = self._log_q
        sha1 = hashlib.sha1
        pack = _BE32.pack
        log1p = math.log1p
        from_bytes = int.from_bytes
        count = 0
        delta = 0
        while count < limit and nodes:
            node = nodes[-1]
            high = node[3] - 1
            node[3] = high
            if node[2] == high:
                nodes.pop()
            child = sha1(node[0] + pack(high)).digest()
            count += 1
            delta -= 1
            depth = node[1] + 1
            if depth < d:
                v = from_bytes(child[:4], "big")
                if v:
                    cc = int(log1p(-v * 2.0**-32) / log_q)
                    if cc > 0:
                        nodes.append([child, depth, 0, cc])
                        delta += cc
        self.bag.total += delta
        self.processed += count
        return count

    def result(self) -> int:
        return self.processed

    def identity(self) -> int:
        return 0

    def reduce(self, a: int, b: int) -> int:
        return a + b

    def encode_bag(self, bag: UtsBag) -> bytes:
        return bag.to_bytes()

    def decode_bag(self, data: bytes) -> UtsBag:
        return UtsBag.from_bytes(data)


def uts_root_init(params: UtsParams):
    """Seed place 0 with the root node's unexplored child range."""

    def init(queue: UtsQueue) -> None:
        root = root_descriptor(params.r)
        cc = child_count(root, 0, params)
        if cc > 0:
            queue.bag.push(root, 0, 0, cc)

    return init


def uts_sequential(params: UtsParams) -> int:
    """Depth-first single-place traversal; counts every node except the root.

    This is the oracle the balanced runs are checked against; it shares
    the descriptor and branching primitives but none of the bag machinery.
    """
    count = 0
    root = root_descriptor(params.r)
    cc = child_count(root, 0, params)
    stack = [(root, 0, cc)]
    while stack:
        desc, depth, n_children = stack.pop()
        child_depth = depth + 1
        for i in range(n_children):
            child = spawn_child(desc, i)
            count += 1
            ccc = child_count(child, child_depth, params)
            if ccc > 0:
                stack.append((child, child_depth, ccc))
    return count
