"""Core engine: configuration, user contracts, lifelines, workers, stats.

Users supply a TaskQueue (process/split/merge plus a commutative,
associative reducer with an explicit identity); the engine supplies global
load balancing: each worker repeatedly processes n items between mailbox
probes, and on draining its bag steals first from up to w random victims
(sequential request/reply) and then from its lifeline buddies, going
inactive until a buddy pushes it work.
"""

from __future__ import annotations

import random
import struct
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum, IntEnum
from statistics import fmean, pstdev
from typing import Any, Callable, Optional, Protocol, runtime_checkable

from . import runtime
from .errors import InvalidConfigError, ProtocolError
from .runtime import PlaceGroup, SchedulerMode

_U32 = struct.Struct("<I")


def default_lifeline_dim(places: int) -> int:
    """ceil(log2 P) computed exactly on integers; 0 for a single place."""
    return (places - 1).bit_length()


@dataclass
class GlbConfig:
    places: int = 1
    random_victims: int = 1
    lifeline_dim: Optional[int] = None
    granularity: int = 64
    seed: int = 0
    scheduler_mode: SchedulerMode = SchedulerMode.DETERMINISTIC

    def __post_init__(self):
        if self.places < 1:
            raise InvalidConfigError(f"places must be >= 1, got {self.places}")
        if self.granularity < 1:
            raise InvalidConfigError(f"granularity must be >= 1, got {self.granularity}")
        if self.random_victims < 0:
            raise InvalidConfigError(f"random_victims must be >= 0, got {self.random_victims}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfigError("seed must fit in 64 unsigned bits")
        if self.lifeline_dim is None:
            self.lifeline_dim = default_lifeline_dim(self.places)
        if not 0 <= self.lifeline_dim <= 64:
            raise InvalidConfigError(f"lifeline_dim must be in [0, 64], got {self.lifeline_dim}")
        # w > P-1 cannot be honored (victims are sampled without the thief);
        # clamp so sweeps over w need not special-case small P.
        self.random_victims = min(self.random_victims, self.places - 1)


@runtime_checkable
class TaskBag(Protocol):
    """Container of pending task items; crosses places only by value."""

    def size(self) -> int: ...

    def split(self) -> Optional["TaskBag"]: ...

    def merge(self, incoming: "TaskBag") -> None: ...


class TaskQueue(ABC):
    """Owns one TaskBag plus an accumulated result of type Z.

    ``process(n)`` must process n items if available and return True;
    returning False means the bag was drained.  ``reduce`` must be
    associative and commutative with ``identity()`` as neutral element.
    Implementations increment ``self.processed`` by the number of items
    each process call consumed.
    """

    # Upper bound on items processed per scheduler turn; workloads with
    # cheap items raise it so the engine can batch process(n) calls.
    block_items: int = 1024

    def __init__(self, bag: TaskBag):
        self.bag = bag
        self.processed = 0

    @abstractmethod
    def process(self, n: int) -> bool: ...

    def process_block(self, n: int, max_items: int, mail_flags, place: int) -> tuple[int, bool]:
        """Run process(n) repeatedly, probing the mail flag between calls.

        Returns (items processed, more work remaining).  Overridden by
        workloads with a compiled fast path; the contract is the same:
        never run past ``max_items`` started items, stop as soon as the
        place's mail flag is set.
        """
        done = 0
        more = True
        while done < max_items:
            if mail_flags[place]:
                break
            before = self.processed
            more = self.process(n)
            done += self.processed - before
            if not more:
                break
        return done, more

    def split(self) -> Optional[TaskBag]:
        return self.bag.split()

    def merge(self, incoming: TaskBag) -> None:
        self.bag.merge(incoming)

    @abstractmethod
    def result(self) -> Any: ...

    @abstractmethod
    def identity(self) -> Any: ...

    @abstractmethod
    def reduce(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def encode_bag(self, bag: TaskBag) -> bytes: ...

    @abstractmethod
    def decode_bag(self, data: bytes) -> TaskBag: ...


# --- steal protocol messages -------------------------------------------------

class StealKind(IntEnum):
    RANDOM = 0
    LIFELINE = 1


@dataclass(frozen=True)
class StealRequest:
    thief: int
    kind: StealKind


@dataclass(frozen=True)
class Deal:
    kind: StealKind
    bag_bytes: bytes


@dataclass(frozen=True)
class NoWork:
    kind: StealKind


@dataclass(frozen=True)
class LifelinePush:
    bag_bytes: bytes


Message = StealRequest | Deal | NoWork | LifelinePush

_TAG_STEAL_REQUEST = 0
_TAG_DEAL = 1
_TAG_NO_WORK = 2
_TAG_LIFELINE_PUSH = 3


def encode_message(msg: Message) -> bytes:
    """[u32 length][u8 tag][body], little-endian; length covers tag + body."""
    if isinstance(msg, StealRequest):
        body = bytes([_TAG_STEAL_REQUEST]) + _U32.pack(msg.thief) + bytes([msg.kind])
    elif isinstance(msg, Deal):
        body = bytes([_TAG_DEAL, msg.kind]) + msg.bag_bytes
    elif isinstance(msg, NoWork):
        body = bytes([_TAG_NO_WORK, msg.kind])
    elif isinstance(msg, LifelinePush):
        body = bytes([_TAG_LIFELINE_PUSH]) + msg.bag_bytes
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}")
    return _U32.pack(len(body)) + body


def decode_message(data: bytes) -> Message:
    if len(data) < 5:
        raise ProtocolError(f"short message: {len(data)} bytes")
    (length,) = _U32.unpack_from(data, 0)
    if length != len(data) - 4:
        raise ProtocolError(f"length field {length} != payload {len(data) - 4}")
    tag = data[4]
    body = data[5:]
    if tag == _TAG_STEAL_REQUEST:
        (thief,) = _U32.unpack_from(body, 0)
        return StealRequest(thief, StealKind(body[4]))
    if tag == _TAG_DEAL:
        return Deal(StealKind(body[0]), body[1:])
    if tag == _TAG_NO_WORK:
        return NoWork(StealKind(body[0]))
    if tag == _TAG_LIFELINE_PUSH:
        return LifelinePush(body)
    raise ProtocolError(f"unknown message tag {tag}")


# --- lifelines ---------------------------------------------------------------

def lifeline_buddies(i: int, places: int, z: int) -> list[int]:
    """Outgoing lifeline buddies of place i in a z-dimensional hypercube.

    Candidates i XOR 2^k outside the group are dropped; when P is not a
    power of two the ring buddy (i+1) mod P is appended (if absent) to keep
    the buddy digraph strongly connected.
    """
    if places < 1:
        raise InvalidConfigError(f"place count must be >= 1, got {places}")
    if not 0 <= i < places:
        raise InvalidConfigError(f"place {i} outside group of {places}")
    buddies = []
    for k in range(z):
        b = i ^ (1 << k)
        if b < places:
            buddies.append(b)
    if places & (places - 1) != 0:
        ring = (i + 1) % places
        if ring not in buddies:
            buddies.append(ring)
    return buddies


def random_victim(i: int, places: int, rng: random.Random) -> Optional[int]:
    """Uniform victim over all places except i; None when there is none."""
    if places < 2:
        return None
    v = rng.randrange(places - 1)
    return v if v < i else v + 1


# --- per-worker statistics ---------------------------------------------------

_STAT_FIELDS = (
    "processing_time",
    "distributing_time",
    "random_requests_sent",
    "random_requests_received",
    "lifeline_requests_sent",
    "lifeline_requests_received",
    "random_steals_perpetrated",
    "lifeline_steals_perpetrated",
    "random_deals_granted",
    "lifeline_deals_granted",
    "items_seeded",
    "items_created",
    "items_sent",
    "items_received",
    "items_processed",
)


@dataclass
class WorkerStats:
    place: int = 0
    processing_time: float = 0.0
    distributing_time: float = 0.0
    random_requests_sent: int = 0
    random_requests_received: int = 0
    lifeline_requests_sent: int = 0
    lifeline_requests_received: int = 0
    random_steals_perpetrated: int = 0
    lifeline_steals_perpetrated: int = 0
    random_deals_granted: int = 0
    lifeline_deals_granted: int = 0
    items_seeded: int = 0
    items_created: int = 0
    items_sent: int = 0
    items_received: int = 0
    items_processed: int = 0

    def as_dict(self) -> dict:
        d = {"place": self.place}
        for name in _STAT_FIELDS:
            d[name] = getattr(self, name)
        return d


@dataclass
class StatsReport:
    per_place: list[dict]
    totals: dict
    processing_mean_s: float
    processing_stddev_s: float
    items_conserved: bool


def aggregate_stats(all_stats: list[WorkerStats]) -> StatsReport:
    """Fold per-place WorkerStats into rows, totals, and dispersion figures.

    Standard deviation is the population form.  The conservation flag
    checks that every item sent in a deal or push was received somewhere.
    """
    rows = [s.as_dict() for s in all_stats]
    totals: dict = {"place": "total"}
    for name in _STAT_FIELDS:
        totals[name] = sum(getattr(s, name) for s in all_stats)
    times = [s.processing_time for s in all_stats]
    mean = fmean(times) if times else 0.0
    stddev = pstdev(times) if times else 0.0
    conserved = totals["items_sent"] == totals["items_received"]
    return StatsReport(
        per_place=rows,
        totals=totals,
        processing_mean_s=mean,
        processing_stddev_s=stddev,
        items_conserved=conserved,
    )


# --- the worker state machine ------------------------------------------------

class Mode(Enum):
    ACTIVE = "active"
    STEALING = "stealing"
    INACTIVE = "inactive"


def _worker_seed(seed: int, place: int) -> int:
    # Splitmix-style decorrelation of per-place streams from one run seed.
    x = (seed + 0x9E3779B97F4A7C15 * (place + 1)) % 2**64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) % 2**64
    return x ^ (x >> 31)


class Worker:
    """One place's sequential activity: process, answer thieves, steal.

    The worker owns its queue exclusively; all interaction with other
    places flows through the group's mailboxes.  Modes: ACTIVE (has work),
    STEALING (drained, random round in flight), INACTIVE (registered on
    lifelines, waiting for a push).
    """

    def __init__(self, place: int, config: GlbConfig, queue: TaskQueue, group: PlaceGroup):
        self.place = place
        self.config = config
        self.queue = queue
        self.group = group
        self.mode = Mode.ACTIVE
        self.lifeline_buddies = lifeline_buddies(place, config.places, config.lifeline_dim)
        self.recorded_thieves: dict[int, bool] = {}
        self.stats = WorkerStats(place=place)
        self.rng = random.Random(_worker_seed(config.seed, place))
        self._tries_left = 0
        self._pending_victim: Optional[int] = None
        group.set_idle(place, False)

    # -- driver interface --

    def step(self) -> bool:
        """One scheduler turn; returns False when there was nothing to do."""
        progressed = self._drain()
        if self.mode is Mode.ACTIVE:
            self._process_turn()
            return True
        return progressed

    # -- message handling --

    def _drain(self) -> bool:
        envelopes = self.group.receive_all(self.place)
        for env in envelopes:
            self.handle_message(env.src, decode_message(env.payload))
        return bool(envelopes)

    def handle_message(self, src: int, msg: Message) -> None:
        if isinstance(msg, StealRequest):
            self._on_steal_request(src, msg)
        elif isinstance(msg, Deal):
            self._on_work(src, msg.bag_bytes, msg.kind)
        elif isinstance(msg, LifelinePush):
            self._on_work(src, msg.bag_bytes, None)
        elif isinstance(msg, NoWork):
            self._on_no_work(src, msg)
        else:
            raise ProtocolError(f"unhandled message {type(msg).__name__}")

    def _on_steal_request(self, src: int, msg: StealRequest) -> None:
        if msg.thief != src:
            raise ProtocolError(f"steal request from {src} claims thief {msg.thief}")
        st = self.stats
        if msg.kind is StealKind.RANDOM:
            st.random_requests_received += 1
        else:
            st.lifeline_requests_received += 1
        if self.mode is Mode.ACTIVE:
            t0 = time.perf_counter()
            half = self.queue.split()
            if half is not None:
                payload = self.queue.encode_bag(half)
                self._send(src, Deal(msg.kind, payload))
                st.items_sent += half.size()
                if msg.kind is StealKind.RANDOM:
                    st.random_deals_granted += 1
                else:
                    st.lifeline_deals_granted += 1
                st.distributing_time += time.perf_counter() - t0
                return
            st.distributing_time += time.perf_counter() - t0
        if msg.kind is StealKind.RANDOM:
            self._send(src, NoWork(StealKind.RANDOM))
        else:
            # Lifeline requests are remembered, not refused.
            self.recorded_thieves[src] = True

    def _on_work(self, src: int, bag_bytes: bytes, kind: Optional[StealKind]) -> None:
        bag = self.queue.decode_bag(bag_bytes)
        size = bag.size()
        if size == 0:
            raise ProtocolError(f"place {self.place}: empty deal from {src}")
        self.queue.merge(bag)
        st = self.stats
        st.items_received += size
        if kind is StealKind.RANDOM:
            st.random_steals_perpetrated += 1
        else:
            # Both an immediate lifeline Deal and a deferred LifelinePush
            # complete a lifeline steal.
            st.lifeline_steals_perpetrated += 1
        if kind is StealKind.RANDOM and self._pending_victim == src:
            self._pending_victim = None
        self._activate()

    def _on_no_work(self, src: int, msg: NoWork) -> None:
        if self.mode is Mode.STEALING and msg.kind is StealKind.RANDOM and src == self._pending_victim:
            self._pending_victim = None
            self._advance_steal()
        # Anything else is a stale reply; the work it refers to is gone.

    # -- processing --

    def _process_turn(self) -> None:
        cfg = self.config
        q = self.queue
        st = self.stats
        flags = self.group.mail_flags
        budget = max(q.block_items, cfg.granularity)
        while budget > 0 and not flags[self.place]:
            # A pending lifeline thief must get its push between every
            # process(n) call, so batching is capped at n while any wait.
            cap = cfg.granularity if self.recorded_thieves else budget
            before_size = q.bag.size()
            t0 = time.perf_counter()
            done, more = q.process_block(cfg.granularity, min(cap, budget), flags, self.place)
            st.processing_time += time.perf_counter() - t0
            st.items_processed += done
            st.items_created += done + q.bag.size() - before_size
            budget -= done
            if self.recorded_thieves and q.bag.size() > 0:
                self._distribute_to_lifelines()
            if not more:
                self._start_stealing()
                return
            if done == 0:
                break

    def _distribute_to_lifelines(self) -> None:
        t0 = time.perf_counter()
        q = self.queue
        st = self.stats
        for thief in list(self.recorded_thieves):
            half = q.split()
            if half is None:
                break
            self._send(thief, LifelinePush(q.encode_bag(half)))
            st.items_sent += half.size()
            del self.recorded_thieves[thief]
        st.distributing_time += time.perf_counter() - t0

    # -- stealing --

    def _start_stealing(self) -> None:
        self.mode = Mode.STEALING
        self._pending_victim = None
        self._tries_left = min(self.config.random_victims, self.config.places - 1)
        self._advance_steal()

    def _advance_steal(self) -> None:
        st = self.stats
        if self._tries_left > 0:
            self._tries_left -= 1
            victim = random_victim(self.place, self.config.places, self.rng)
            self._pending_victim = victim
            self._send(victim, StealRequest(self.place, StealKind.RANDOM))
            st.random_requests_sent += 1
            return
        for b in self.lifeline_buddies:
            self._send(b, StealRequest(self.place, StealKind.LIFELINE))
            st.lifeline_requests_sent += 1
        self._pending_victim = None
        self.mode = Mode.INACTIVE
        self.group.set_idle(self.place, True)

    def _activate(self) -> None:
        if self.mode is not Mode.ACTIVE:
            self.mode = Mode.ACTIVE
            self._tries_left = 0
            self._pending_victim = None
            self.group.set_idle(self.place, False)

    def _send(self, dst: int, msg: Message) -> None:
        self.group.send(self.place, dst, encode_message(msg))


# --- running a job -----------------------------------------------------------

@dataclass
class GlbResult:
    value: Any
    stats: list[WorkerStats]
    elapsed_s: float
    messages_sent: int
    messages_delivered: int
    trace: Optional[list[tuple]] = None

    @property
    def report(self) -> StatsReport:
        return aggregate_stats(self.stats)


def _audit(workers) -> None:
    for w in workers:
        st = w.stats
        if w.queue.bag.size() != 0:
            raise ProtocolError(f"place {w.place}: bag not empty at quiescence")
        inflow = st.items_seeded + st.items_received + st.items_created
        outflow = st.items_processed + st.items_sent
        if inflow != outflow:
            raise ProtocolError(
                f"place {w.place}: item conservation violated: "
                f"seeded {st.items_seeded} + received {st.items_received} "
                f"+ created {st.items_created} != processed {st.items_processed} "
                f"+ sent {st.items_sent}"
            )
        if st.random_steals_perpetrated > st.random_requests_sent:
            raise ProtocolError(f"place {w.place}: more random steals than requests sent")
        if st.lifeline_steals_perpetrated > st.lifeline_requests_sent:
            raise ProtocolError(f"place {w.place}: more lifeline steals than requests sent")


def glb_run(
    config: GlbConfig,
    queue_factory: Callable[[int], TaskQueue],
    root_init: Optional[Callable[[TaskQueue], None]] = None,
    *,
    timeout_s: float = 60.0,
    trace: bool = False,
) -> GlbResult:
    """Run one GLB job to quiescence and fold all places' results.

    ``queue_factory(place)`` builds each place's TaskQueue; ``root_init``,
    when given, seeds place 0's queue (a queue may instead statically seed
    its own bag in the factory).  Returns the reduced value plus per-place
    stats; the value is determinate: independent of P, w, z, n, scheduler
    mode, and seeds.
    """
    group = runtime.spawn_places(config.places, config.scheduler_mode, config.seed, trace=trace)
    queues = [queue_factory(p) for p in range(config.places)]
    workers = [Worker(p, config, queues[p], group) for p in range(config.places)]
    if root_init is not None:
        root_init(queues[0])
    for w in workers:
        w.stats.items_seeded = w.queue.bag.size()
    t0 = time.perf_counter()
    runtime.run_until_quiescent(group, workers, timeout_s=timeout_s)
    elapsed = time.perf_counter() - t0
    if not group.quiescent():
        raise ProtocolError("scheduler returned before quiescence")
    _audit(workers)
    value = queues[0].identity()
    for q in queues:
        value = queues[0].reduce(value, q.result())
    return GlbResult(
        value=value,
        stats=[w.stats for w in workers],
        elapsed_s=elapsed,
        messages_sent=int(group.sent.sum()),
        messages_delivered=int(group.delivered.sum()),
        trace=group.trace,
    )
