"""
Scheduling workloads on a heterogeneous platform
================================================

Four workloads, four compute units of different shapes. A schedule is a
one-to-one assignment plus a dataflow per unit, and its quality is the
runtime of the slowest workload. There are 3^4 * 4! = 1944 schedules.
"""

from systolic_dse.core import GemmWorkload, describe_entry
from systolic_dse.core import build_table
from systolic_dse.oracle import oracle_case3
from systolic_dse.sched import schedule_cost, unit_runtime_matrix

table = build_table(3)
platform = table.platform
print(len(table), "schedules on", [f"{u.shape.rows}x{u.shape.cols}" for u in platform.units])

workloads = [GemmWorkload(90_000, 64, 500), GemmWorkload(200, 9_000, 300),
             GemmWorkload(3_000, 3_000, 30), GemmWorkload(50, 50, 900)]

# Cycles of every workload on every unit under every dataflow.
rt = unit_runtime_matrix(workloads, platform)
print("best-dataflow runtime per (workload, unit):")
print(rt.min(axis=2))

best = oracle_case3(workloads, platform, table)
cost = schedule_cost(workloads, platform, table[best])
print(describe_entry(table[best]))
print("per workload", cost.per_workload_cycles, "critical", cost.critical_path)

###############################################################################
# The naive identity schedule for comparison.

naive = schedule_cost(workloads, platform, table[0])
print(f"identity/OS critical path {naive.critical_path} ({naive.critical_path / cost.critical_path:.1f}x worse)")
