"""Places substrate: mailboxes, schedulers, and quiescence detection.

A place group is a set of P isolated activities connected by FIFO
mailboxes.  Bags only cross place boundaries serialized, so value-copy
semantics hold even though everything lives in one process.  Two drivers
are provided: a deterministic single-activity scheduler that steps
workers round-robin in a seeded order, and a parallel scheduler with one
thread per place plus a monitor that pauses all workers at message-drain
boundaries to take consistent quiescence snapshots.
"""

from __future__ import annotations

import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from time import perf_counter
from typing import Optional

import numpy as np

from .errors import GlbError, InvalidConfigError, QuiescenceTimeout, RoutingError, WorkloadError

# Idle workers nap this long between mailbox polls (parallel mode).
_IDLE_SLEEP_S = 0.0002
_MONITOR_POLL_S = 0.0005
_PAUSE_PARK_TIMEOUT_S = 10.0


class SchedulerMode(Enum):
    DETERMINISTIC = "deterministic"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class Envelope:
    """One in-flight message; seq is strictly increasing per (src, dst)."""

    src: int
    dst: int
    seq: int
    payload: bytes


class PlaceGroup:
    """P mailboxes plus the counters needed to observe global quiescence.

    ``mail_flags`` is a per-place numpy array set on send and cleared on
    drain; task kernels poll it between process(n) calls without touching
    any lock.  ``sent``/``delivered`` count envelopes per ordered pair.
    """

    def __init__(self, places: int, mode: SchedulerMode, seed: int, trace: bool = False):
        if places < 1:
            raise InvalidConfigError(f"place count must be >= 1, got {places}")
        self.places = places
        self.mode = mode
        self.seed = seed
        self._boxes: list[deque[Envelope]] = [deque() for _ in range(places)]
        self._locks = [threading.Lock() for _ in range(places)]
        self._seq = np.zeros((places, places), dtype=np.int64)
        self.sent = np.zeros((places, places), dtype=np.int64)
        self.delivered = np.zeros((places, places), dtype=np.int64)
        self.mail_flags = np.zeros(places, dtype=np.int64)
        self.idle = np.ones(places, dtype=np.bool_)
        self.trace: Optional[list[tuple]] = [] if trace else None
        rng = random.Random(seed)
        order = list(range(places))
        rng.shuffle(order)
        # Deterministic-mode round-robin visiting order (the seeded tie-break).
        self.step_order: list[int] = order

    def send(self, src: int, dst: int, payload: bytes) -> None:
        if not 0 <= src < self.places:
            raise RoutingError(f"source place {src} outside group of {self.places}")
        if not 0 <= dst < self.places:
            raise RoutingError(f"destination place {dst} outside group of {self.places}")
        payload = bytes(payload)
        with self._locks[dst]:
            seq = int(self._seq[src, dst])
            self._seq[src, dst] += 1
            self._boxes[dst].append(Envelope(src, dst, seq, payload))
            self.sent[src, dst] += 1
            self.mail_flags[dst] = 1
            if self.trace is not None:
                self.trace.append(("send", src, dst, seq, payload))

    def receive_all(self, dst: int) -> list[Envelope]:
        """Drain dst's mailbox in FIFO order and clear its mail flag."""
        with self._locks[dst]:
            box = self._boxes[dst]
            out = list(box)
            box.clear()
            self.mail_flags[dst] = 0
            for env in out:
                self.delivered[env.src, dst] += 1
                if self.trace is not None:
                    self.trace.append(("recv", dst, env.src, env.seq))
        return out

    def mail_pending(self, dst: int) -> bool:
        return bool(self.mail_flags[dst])

    def set_idle(self, place: int, flag: bool) -> None:
        self.idle[place] = flag

    def all_idle(self) -> bool:
        return bool(self.idle.all())

    def quiescent(self) -> bool:
        """True iff all places idle, all mailboxes empty, all counters match.

        Only meaningful at a consistent point: between steps in
        deterministic mode, or under the parallel scheduler's global pause.
        """
        if not self.idle.all():
            return False
        for i, lock in enumerate(self._locks):
            with lock:
                if self._boxes[i]:
                    return False
        return bool(np.array_equal(self.sent, self.delivered))

    def mailbox_depths(self) -> list[int]:
        return [len(b) for b in self._boxes]


def spawn_places(places: int, mode: SchedulerMode, seed: int, trace: bool = False) -> PlaceGroup:
    return PlaceGroup(places, mode, seed, trace=trace)


def _diagnose(group: PlaceGroup, workers) -> str:
    lines = [f"quiescence not reached within budget; sent={int(group.sent.sum())}, "
             f"delivered={int(group.delivered.sum())}"]
    depths = group.mailbox_depths()
    for w in workers:
        lines.append(
            f"  place {w.place}: mode={w.mode.name}, bag={w.queue.bag.size()}, "
            f"mailbox={depths[w.place]}"
        )
    return "\n".join(lines)


def _run_deterministic(group: PlaceGroup, workers, timeout_s: float) -> None:
    deadline = perf_counter() + timeout_s
    while True:
        for i in group.step_order:
            w = workers[i]
            try:
                w.step()
            except GlbError:
                raise
            except Exception as e:
                raise WorkloadError(w.place, e) from e
        if group.quiescent():
            return
        if perf_counter() > deadline:
            raise QuiescenceTimeout(_diagnose(group, workers))


class _ParallelControl:
    """Shared stop/pause state for the parallel scheduler, all under one lock."""

    def __init__(self, places: int):
        self.cond = threading.Condition()
        self.pause_requested = False
        self.paused = 0
        self.alive = places
        self.stop = False
        self.error: Optional[tuple[int, BaseException]] = None


def _worker_thread(ctl: _ParallelControl, worker) -> None:
    try:
        while True:
            with ctl.cond:
                while ctl.pause_requested and not ctl.stop:
                    ctl.paused += 1
                    ctl.cond.notify_all()
                    ctl.cond.wait()
                    ctl.paused -= 1
                if ctl.stop:
                    break
            worked = worker.step()
            if not worked:
                time.sleep(_IDLE_SLEEP_S)
    except Exception as e:
        with ctl.cond:
            if ctl.error is None:
                ctl.error = (worker.place, e)
            ctl.stop = True
            ctl.cond.notify_all()
    finally:
        with ctl.cond:
            ctl.alive -= 1
            ctl.cond.notify_all()


def _run_parallel(group: PlaceGroup, workers, timeout_s: float) -> None:
    ctl = _ParallelControl(group.places)
    threads = [
        threading.Thread(target=_worker_thread, args=(ctl, w), name=f"place-{w.place}", daemon=True)
        for w in workers
    ]
    deadline = perf_counter() + timeout_s
    for t in threads:
        t.start()
    try:
        while True:
            with ctl.cond:
                if ctl.error is not None or ctl.alive == 0:
                    break
            if group.all_idle():
                quiet = False
                with ctl.cond:
                    if ctl.error is None:
                        ctl.pause_requested = True
                        parked = ctl.cond.wait_for(
                            lambda: ctl.paused == ctl.alive or ctl.error is not None,
                            timeout=_PAUSE_PARK_TIMEOUT_S,
                        )
                        if parked and ctl.error is None:
                            quiet = group.quiescent()
                        if quiet:
                            ctl.stop = True
                        ctl.pause_requested = False
                        ctl.cond.notify_all()
                if quiet:
                    return
                time.sleep(_MONITOR_POLL_S)
            else:
                time.sleep(_MONITOR_POLL_S)
            if perf_counter() > deadline:
                raise QuiescenceTimeout(_diagnose(group, workers))
    finally:
        with ctl.cond:
            ctl.stop = True
            ctl.pause_requested = False
            ctl.cond.notify_all()
        for t in threads:
            t.join(timeout=_PAUSE_PARK_TIMEOUT_S)
        with ctl.cond:
            if ctl.error is not None:
                place, exc = ctl.error
                if isinstance(exc, GlbError):
                    raise exc
                raise WorkloadError(place, exc) from exc


def run_until_quiescent(group: PlaceGroup, workers, timeout_s: float = 60.0) -> None:
    """Drive all workers until the group is quiescent.

    Raises QuiescenceTimeout with per-place diagnostics if the budget is
    exceeded, and WorkloadError if task code raises inside a worker.
    """
    if len(workers) != group.places:
        raise InvalidConfigError(f"expected {group.places} workers, got {len(workers)}")
    if group.mode is SchedulerMode.DETERMINISTIC:
        _run_deterministic(group, workers, timeout_s)
    else:
        _run_parallel(group, workers, timeout_s)
