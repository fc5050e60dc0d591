"""Smoke test for the `ical` extension module.

Build and run:
    cargo build --release -p ical-py
    cp target/release/libical.so python/ical.so
    python3 python/smoke_test.py
"""

import math
import os
import random
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import ical  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    stats = ical.example1_stats(50)
    assert close(stats["mi_x1"], 0.940, 5e-4), stats
    assert close(stats["mi_x2"], 0.325, 5e-4), stats
    assert close(stats["entropy_after_x1"], 0.287, 5e-4), stats
    assert close(stats["entropy_after_x2"], 0.0, 1e-12), stats

    rng = random.Random(7)

    def simplex(c):
        w = [rng.random() + 1e-3 for _ in range(c)]
        s = sum(w)
        return [v / s for v in w]

    values = [[simplex(3) for _ in range(16)] for _ in range(12)]
    preds = ical.PredictionTensor(values)
    assert preds.shape == (12, 16, 3)

    k = preds.kernel(0)
    assert len(k) == 16 and close(k[0][0], 5.0, 1e-12)
    l = preds.kernel(1)
    a = ical.dhsic([k, l])
    b = ical.hsic2(k, l)
    assert a >= 0.0 and close(a, b, 1e-9 * max(1.0, abs(a))), (a, b)

    for policy in ical.POLICIES:
        batch = ical.select(preds, policy, 4, seed=3, subsample=8)
        assert len(batch) == 4 and len(set(batch)) == 4, (policy, batch)
        assert batch == ical.select(preds, policy, 4, seed=3, subsample=8)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "preds.bin")
        preds.save(path)
        again = ical.PredictionTensor.load(path)
        assert again.shape == preds.shape
        assert all(close(x, y, 1e-6) for x, y in zip(again.mean_predictive(5), preds.mean_predictive(5)))

    records = ical.run_experiment(
        """
name = "smoke"
seed = 1
rounds = 2

[backend]
kind = "discrete"
task = { name = "example1", points = 20 }

[acquisition]
policy = "ical"
batch_size = 1
mc_samples = 64

[split]
initial = []
"""
    )
    assert len(records) == 3 and records[-1]["train_size"] == 2, records
    assert all(math.isfinite(r["pool_entropy"]) for r in records)

    try:
        ical.select(preds, "nope", 2)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown policy accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
