"""
The planted point-assignment instance
======================================

Rows are random bit vectors; most carry one spike of height t at a hidden
coordinate. Sending each row to the cluster of its spike (or of some other 1)
against the planted centers costs about n(d + t^2 - 2t)/4.
"""

from sketchfactor.hardinstance import (
    HardInstanceSpec,
    clustered_cost_check,
    cost_upper_bound,
    generate,
    planted_copies,
    target_centers,
)

n, d, t = 2000, 100, 8
spec = HardInstanceSpec(n, d, t, alpha=1 / (100 * t * t), seed=0)
inst = generate(spec)
cost = clustered_cost_check(inst)
print(f"reference clustering cost {cost:.0f}, bound {cost_upper_bound(n, d, t):.0f}")
print("spiked rows:", int(inst.spiked.sum()), "of", n)

C, gamma = target_centers(HardInstanceSpec(10, 2, 3, 0.5))
print("centers for t=3, d=2:\n", C)
print("copies per center to pin them at n=2000, t=8:", planted_copies(n, d, t, d))
