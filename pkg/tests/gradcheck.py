"""Central finite-difference gradient check shared by the model and acceptance tests."""

import numpy as np

from systolic_dse.data import EncoderSpec, FeatureRule
from systolic_dse.model import ModelSpec, init_model, loss_and_grad


def random_small_model(rng, baseline=False):
    nf = int(rng.integers(1, 4))
    rules = tuple(FeatureRule.offset(0, int(rng.integers(1, 8))) for _ in range(nf))
    spec = ModelSpec(EncoderSpec(rules), int(rng.integers(2, 11)), embedding_dim=int(rng.integers(1, 5)),
                     hidden_units=int(rng.integers(1, 17)), baseline_mode=baseline)
    model = init_model(spec, int(rng.integers(1 << 30)))
    # Non-zero biases so every term of the gradient is exercised.
    for name in ("hidden_b", "output_b"):
        model.params[name] = rng.normal(scale=0.1, size=model.params[name].shape)
    batch = int(rng.integers(1, 9))
    x = np.column_stack([rng.integers(0, r.vocab, batch) for r in rules])
    if baseline:
        x = x.astype(np.float64) + rng.normal(size=x.shape)
    y = rng.integers(0, spec.num_classes, batch)
    return model, x, y


def max_relative_error(model, x, y, step=1e-6):
    """Largest |analytic - numeric| / max(|analytic| + |numeric|, 1e-8) over all trainable entries."""
    _, grads = loss_and_grad(model, x, y)
    worst = 0.0
    for name in model.trainable():
        p = model.params[name]
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            up, _ = loss_and_grad(model, x, y)
            p[idx] = old - step
            down, _ = loss_and_grad(model, x, y)
            p[idx] = old
            num = (up - down) / (2 * step)
            ana = grads[name][idx]
            denom = max(abs(ana) + abs(num), 1e-8)
            # Entries whose true gradient is ~0 are compared absolutely.
            err = abs(ana - num) / denom if denom > 1e-6 else abs(ana - num)
            worst = max(worst, err)
    return worst
