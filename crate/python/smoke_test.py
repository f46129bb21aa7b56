#!/usr/bin/env python3
"""Smoke test for the lmopt_py extension module.

Build and stage the module first:

    cargo build -p lmopt-py --release
    cp target/release/liblmopt_py.so python/lmopt_py.so

then run:  python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import lmopt_py as lm


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} != {b}"


def main():
    # norms and the LMO identity
    approx(lm.norm("l2", [3.0, 4.0]), 5.0)
    approx(lm.dual_norm("linf", [1.0, -2.0, 3.0]), 6.0)
    step = lm.lmo("linf", [2.0, -1.0, 0.0], 0.5)
    assert step == [-0.5, 0.5, 0.0], step
    m = [0.3, -1.2, 2.5]
    s = lm.lmo("l1", m, 2.0)
    approx(sum(a * b for a, b in zip(m, s)), -2.0 * lm.dual_norm("l1", m))

    # libsvm round trip
    text = "+1 1:0.5 3:-2\n-1 2:1\n"
    feats, labels = lm.parse_libsvm(text)
    assert labels == [1.0, -1.0]
    feats2, labels2 = lm.parse_libsvm(lm.to_libsvm(feats, labels))
    assert feats == feats2 and labels == labels2

    # schedule values
    alpha, eta, beta = lm.schedule_coeffs("som-exp", 1.0, 7)
    approx(alpha, 0.25)
    approx(eta, 0.25)
    approx(beta, 0.75)

    # a tiny deterministic run, twice: identical CSV bytes
    config = {
        "problem": "logreg",
        "data": {"source": "synthetic", "n": 40, "d": 6, "data_seed": 3},
        "lambda": 0.01,
        "norm": "euclidean",
        "variant": "som-v2",
        "schedule": {"kind": "som_exp", "eta0": 0.1},
        "batch_size": 4,
        "iters": 50,
        "seed": 12,
        "eval_every": 5,
    }
    rows = lm.run_json(json.dumps(config))
    assert rows[0]["k"] == 0 and rows[-1]["k"] == 49
    assert rows[-1]["runmin_loss"] <= rows[0]["runmin_loss"]
    assert all(math.isfinite(r["loss"]) for r in rows)
    csv_a = lm.run_json_to_csv(json.dumps(config))
    csv_b = lm.run_json_to_csv(json.dumps(config))
    assert csv_a == csv_b
    print("lmopt_py smoke test: OK")


if __name__ == "__main__":
    main()
