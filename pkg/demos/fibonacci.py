"""Fibonacci by task expansion: the smallest possible GLB workload.

Each bag item is an argument n.  Processing an item either adds it to the
running total (n < 2) or replaces it by n-1 and n-2, so the bag churns
through the whole call tree without recursion.  The point of the demo is
determinacy: the reduced value never depends on how work got shuffled
around.
"""

from glb import GlbConfig, SchedulerMode, glb_run
from glb.cli import FibQueue, fib_root_init, fib_sequential

N = 30
expect = fib_sequential(N)
print(f"fib({N}) = {expect} (sequential oracle)\n")

print(f"{'places':>6} {'mode':>13} {'value':>8} {'steals':>6} {'msgs':>5}")
for places in (1, 2, 4, 8):
    for mode in SchedulerMode:
        cfg = GlbConfig(places=places, seed=7, scheduler_mode=mode)
        res = glb_run(cfg, lambda p: FibQueue(), fib_root_init(N))
        assert res.value == expect
        steals = sum(s.random_steals_perpetrated + s.lifeline_steals_perpetrated
                     for s in res.stats)
        print(f"{places:>6} {mode.value:>13} {res.value:>8} "
              f"{steals:>6} {res.messages_sent:>5}")

print("\nSame value every time; only the message traffic changes.")
