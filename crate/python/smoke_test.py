"""Smoke test for the qrecover_py extension.

Build and install first, e.g. `maturin build --release -m crates/py/Cargo.toml`
followed by `pip install target/wheels/qrecover-*.whl`, then run
`python python/smoke_test.py` or `pytest python/`.
"""

import json
import math

import qrecover_py as q


def test_entropy_of_maximally_mixed_qubit():
    half = [[0.5, 0.0], [0.0, 0.5]]
    assert abs(q.entropy(half) - 1.0) < 1e-12


def test_relative_entropy_and_fidelity():
    plus = [[0.5, 0.5], [0.5, 0.5]]
    zero = [[1.0, 0.0], [0.0, 0.0]]
    half = [[0.5, 0.0], [0.0, 0.5]]
    assert math.isinf(q.relative_entropy(plus, zero))
    assert abs(q.relative_entropy(zero, half) - 1.0) < 1e-12
    assert abs(q.fidelity(plus, zero) - 0.5) < 1e-12
    assert abs(q.fidelity([[0.5, -0.5j], [0.5j, 0.5]], [[0.5, -0.5j], [0.5j, 0.5]]) - 1.0) < 1e-10


def test_bad_matrix_raises():
    try:
        q.entropy([[1.0, 0.0]])
    except ValueError:
        return
    raise AssertionError("expected ValueError")


def test_run_suite_is_deterministic():
    a = q.run_suite("info-gain", seed=3, trials=2)
    b = q.run_suite("info-gain", seed=3, trials=2)
    assert a == b
    report = json.loads(a)
    assert report["schema_version"] == q.SCHEMA_VERSION
    assert report["all_pass"] is True
    assert report["summary"][0]["suite"] == "info-gain"


def test_run_config():
    report = json.loads(q.run_config(json.dumps({"suites": ["cpdp"], "trials": 2})))
    assert report["all_pass"] is True
    try:
        q.run_config('{"tol": -1}')
    except ValueError:
        return
    raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
