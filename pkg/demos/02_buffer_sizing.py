"""
Sizing the scratchpad buffers
=============================

Each operand gets its own SRAM. A buffer that holds two folds of data can
prefetch the next fold while the array computes, so it only stalls when
the interface is too slow. A buffer that holds one fold stalls on every
load, and an undersized one refetches.
"""

import numpy as np

from systolic_dse.core import ArrayConfig, ArrayShape, BufferSizes, Dataflow, GemmWorkload, build_table
from systolic_dse.cost import fold_geometry
from systolic_dse.mem import KB, Case2Query, operand_stalls, total_stalls
from systolic_dse.oracle import oracle_case2

demand, fold_cycles, folds, bw = 60_000, 110, 8, 100
for cap_kb in (25, 50, 100, 200):
    print(f"{cap_kb:4d} KB -> {operand_stalls(demand, cap_kb * KB, bw, fold_cycles, folds):6d} stall cycles")

###############################################################################
# The oracle picks the smallest total stall count, then the smallest total
# capacity. With a generous interface, the minimum grid point is enough.

table = build_table(2)
q = Case2Query(GemmWorkload(32, 32, 16), ArrayConfig(ArrayShape(32, 32), Dataflow.OS), bandwidth=50, budget_kb=3000)
best = table[oracle_case2(q, table)]
print("best buffers:", best, "runtime", total_stalls(q, best).total_runtime)

###############################################################################
# A bigger workload on a slow interface pushes the choice up the grid.

q = Case2Query(GemmWorkload(2000, 500, 400), ArrayConfig(ArrayShape(128, 32), Dataflow.WS), bandwidth=12, budget_kb=1500)
best = table[oracle_case2(q, table)]
rep = total_stalls(q, best)
print("best buffers:", best, "stalls", rep.total_stalls, "of", rep.total_runtime)
tiny = total_stalls(q, BufferSizes(100, 100, 100))
print("vs 100/100/100:", tiny.total_stalls, "stalls", f"({tiny.total_runtime / rep.total_runtime:.2f}x slower)")
print("per-fold demand (KB):", np.round(np.array(fold_geometry(q.workload, q.array.shape, q.array.dataflow).demands) / KB, 1))
