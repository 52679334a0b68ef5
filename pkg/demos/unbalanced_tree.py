"""Unbalanced tree search: counting a tree nobody can partition up front.

Node identities are SHA-1 digests; each node's child count is drawn from
a geometric law with mean b0, cut off at depth d.  Subtrees hanging off
sibling nodes differ in size by orders of magnitude, which is exactly the
imbalance work stealing is for.
"""

from glb import GlbConfig, glb_run
from glb.uts import UtsParams, UtsQueue, uts_root_init, uts_sequential

print("Tree sizes for b0=4, r=19 as the depth cutoff grows:")
for d in (3, 6, 8, 10):
    params = UtsParams(b0=4.0, d=d, r=19)
    print(f"  d={d:>2}: {uts_sequential(params):>9} nodes")

params = UtsParams(b0=4.0, d=10, r=19)
expect = uts_sequential(params)

print(f"\nDistributed count of the d=10 tree ({expect} nodes):")
cfg = GlbConfig(places=8, seed=1)
res = glb_run(cfg, lambda p: UtsQueue(params), uts_root_init(params),
              timeout_s=300)
assert res.value == expect
rep = res.report

print(f"  places=8  count={res.value}  (matches the sequential oracle)")
print(f"  busy time per place, mean {rep.processing_mean_s * 1e3:.1f} ms, "
      f"stddev {rep.processing_stddev_s * 1e3:.1f} ms")
print(f"\n{'place':>5} {'processed':>9} {'sent':>7} {'received':>8}")
for s in res.stats:
    print(f"{s.place:>5} {s.items_processed:>9} {s.items_sent:>7} {s.items_received:>8}")
print("\nEvery place ends up with real work even though place 0 held the"
      "\nentire tree at the start.")
