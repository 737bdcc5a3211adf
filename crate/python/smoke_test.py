"""Smoke test for the dp_tradeoff extension module.

Build and run:

    cargo build -p dp-python --release --features extension-module
    python3 python/smoke_test.py target/release/libdp_tradeoff.so

The shared library is copied to a temporary directory as dp_tradeoff.so so
that it imports without maturin.
"""

import importlib
import shutil
import sys
import tempfile
from pathlib import Path


def load(lib: Path):
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "dp_tradeoff.so")
    sys.path.insert(0, str(tmp))
    return importlib.import_module("dp_tradeoff")


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main() -> int:
    default = Path(__file__).resolve().parent.parent / "target" / "release" / "libdp_tradeoff.so"
    dp = load(Path(sys.argv[1]) if len(sys.argv) > 1 else default)

    bsc = dp.Problem([[0.54, 0.06], [0.04, 0.36]])
    assert close(bsc.d_star, 0.10, 1e-12), bsc.d_star
    assert bsc.n_x == 2 and bsc.n_y == 2

    rep = bsc.solve(1.0)
    assert rep.value == bsc.d_star, rep
    assert rep.gap <= 1e-8
    assert close(bsc.solve(0.01, form="tv").value, bsc.solve(0.01).value, 1e-12)

    q = rep.estimator
    assert close(bsc.expected_distortion(q), rep.value)
    assert bsc.perception(bsc.posterior_sampling()) <= 1e-12

    for method in ("vertex", "sweep", "closed-form"):
        c = bsc.curve(method)
        assert len(c.breakpoints) == 1, (method, c)
        assert close(c.p_star, 0.02, 1e-6), (method, c.p_star)
        assert close(c.slopes[0], -5 / 7, 1e-6), (method, c.slopes)
        mid = bsc.perception(c.estimator(0.01))
        assert mid <= 0.01 + 1e-9, mid

    ind = dp.Problem([[0.3, 0.3], [0.2, 0.2]])
    c = ind.curve("closed-form")
    assert close(c.breakpoints[0], 0.4) and close(c.value(0.0), 0.48) and close(c.slopes[0], -0.2)
    assert ind.binary()["case"] in ("X1Underallocated", "X1Overallocated", "Balanced")

    rnd = dp.Problem.random(7, 3, 5)
    v = rnd.verify(grid=5)
    assert v["pass"], v
    assert not bsc.verify(grid=5, inject_fault=True)["pass"]

    w, coupling = dp.wasserstein1([0.2, 0.8], [0.5, 0.5])
    assert close(w, dp.tv_distance([0.2, 0.8], [0.5, 0.5]), 1e-12)
    assert len(coupling) == 2

    try:
        dp.Problem([[0.5, 0.0], [0.25, 0.125, 0.125]])
    except ValueError as e:
        assert "row" in str(e) or "p_xy" in str(e) or "shape" in str(e), e
    else:
        raise AssertionError("ragged matrix accepted")

    try:
        dp.Problem.random(1, 3, 12).curve("vertex")
    except dp.BudgetExceededError:
        pass
    else:
        raise AssertionError("vertex budget not enforced")

    print("smoke test passed:", bsc, rep, c)
    return 0


if __name__ == "__main__":
    sys.exit(main())
