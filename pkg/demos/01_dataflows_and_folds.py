"""
Dataflows and folds on a systolic array
=======================================

A GEMM of shape (M, N, K) rarely fits an R x C array in one pass. Each
dataflow pins two of the three dimensions to the array and streams the
third, so the fold count and the per-fold latency trade off differently.
"""

from systolic_dse.core import ArrayShape, Dataflow, GemmWorkload
from systolic_dse.cost import compute_runtime, fold_geometry, mapping_utilization

# A tall workload: many output rows, short reduction.
w = GemmWorkload(m=1000, n=32, k=32)
s = ArrayShape(16, 16)

for d in Dataflow:
    plan = fold_geometry(w, s, d)
    print(f"{d.name}: {plan.fold_count:3d} folds x {plan.fold_cycles:4d} cycles "
          f"= {compute_runtime(w, s, d):5d}  utilization {mapping_utilization(w, s, d):.2f}")

# Weight stationary streams M through the array, so a large M costs latency
# inside one fold rather than extra folds. That is why it wins here.

###############################################################################
# Array aspect ratio matters too. Same MAC budget, three shapes:

for rows, cols in [(64, 16), (32, 32), (16, 64)]:
    s = ArrayShape(rows, cols)
    best = min(Dataflow, key=lambda d: (compute_runtime(w, s, d), d))
    print(f"{rows:3d}x{cols:<3d} best {best.name} at {compute_runtime(w, s, best)} cycles")
