"""
Training the recommender
========================

The model embeds each bucketed input feature, concatenates the embeddings
and classifies with a one-hidden-layer MLP. Here it learns case 1 (array
shape and dataflow under a MAC cap) from a small dataset; the acceptance
tests run the same pipeline at 200k points.
"""

from systolic_dse.core import build_table, describe_entry
from systolic_dse.data import default_encoder, generate_dataset
from systolic_dse.metrics import normalized_performance
from systolic_dse.model import ModelSpec, TrainConfig, init_model, predict, train

table = build_table(1)
ds = generate_dataset(1, 20_000, seed=3, table=table)
test = generate_dataset(1, 2_000, seed=4, table=table)

spec = ModelSpec(default_encoder(table), num_classes=len(table))
model = init_model(spec, seed=0, meta={"case": 1})
report = train(model, ds, TrainConfig(epochs=5))
print("epoch,train_loss,train_acc,val_acc")
print("\n".join(report.log_lines()))

###############################################################################
# Accuracy undersells the model: many wrong ids are near-optimal. The
# normalized performance ratio captures that.

perf = normalized_performance(1, test.features, predict(model, test.features), test.labels, table)
print(f"test accuracy {perf.accuracy:.3f}, GeoMean normalized performance {perf.geomean_normalized_perf:.3f}")

query = [1024, 256, 64, 14]
print("query", query, "->", describe_entry(table[predict(model, query)]))
