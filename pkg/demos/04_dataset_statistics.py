"""
What the label distributions look like
======================================

Generate a small dataset per case study, then look at how concentrated the
optimal labels are and whether two popular classes separate in feature space.
"""

from systolic_dse.core import build_table, describe_entry
from systolic_dse.data import generate_dataset
from systolic_dse.stats import class_histogram, top2_pca

for case in (1, 2, 3):
    table = build_table(case)
    ds = generate_dataset(case, 3000, seed=1, table=table)
    hist = class_histogram(ds)
    top10 = sum(f for _, f in hist[:10])
    print(f"case {case}: {len(hist)} of {len(table)} labels used, top-10 mass {top10:.2f}")
    for label, freq in hist[:3]:
        print(f"    {freq:.3f}  {describe_entry(table[label])}")

###############################################################################
# PCA of the two most common case-1 labels. The components are over
# standardized (m, n, k, mac_exp).

table = build_table(1)
ds = generate_dataset(1, 3000, seed=1, table=table)
a, b = (label for label, _ in class_histogram(ds)[:2])
res = top2_pca(ds.features, ds.labels, (a, b))
print("components:\n", res.components.round(3))
for c in (a, b):
    pts = [(x, y) for x, y, k in res.projections if k == c]
    mx = sum(p[0] for p in pts) / len(pts)
    print(f"class {c}: {len(pts)} points, mean pc1 {mx:+.2f}")
