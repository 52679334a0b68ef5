"""Interval bags: shipping vertex ranges instead of vertex lists.

A bag of half-open intervals can hand off half its pending vertices by
moving O(intervals) boundary markers, never copying elements.  Two split
strategies are shown: one balances totals exactly, one halves every
interval so both sides keep locality.
"""

from glb.bags import Interval, IntervalBag, SplitStrategy

bag = IntervalBag([Interval(0, 6), Interval(10, 13), Interval(20, 27)])
print(f"start:          {bag}  ({bag.size()} vertices)")

given = bag.split()
print(f"suffix split keeps {bag} and gives {given}")
print(f"  totals {bag.size()} vs {given.size()}: balanced to within one\n")

bag = IntervalBag([Interval(0, 6), Interval(10, 13), Interval(20, 27)],
                  strategy=SplitStrategy.EACH_HALVED)
given = bag.split()
print(f"halving split keeps {bag}")
print(f"            and gives {given}")
print(f"  totals {bag.size()} vs {given.size()}: every range cut in two\n")

# Merging moves interval objects, not elements: the moves counter bounds
# the real cost of absorbing stolen work.
bag.merge(given)
print(f"after merging back: {bag}")
print(f"  interval moves spent merging: {bag.moves} "
      f"(one per incoming interval, regardless of width)")

# Workers consume from the front; stolen suffixes come off the back.
head = bag.pop(4)
print(f"\npop(4) hands the worker vertices {head}, leaving {bag}")
