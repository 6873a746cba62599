"""Smoke test for the mhd_py extension module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import json
import math
import os
import tempfile

import mhd_py


def main():
    bank = mhd_py.FilterBank(64)
    assert bank.band == (-1, 3), bank.band
    assert bank.partition_deviation() <= 1e-10

    f = mhd_py.Field.sample(64, seed=3)
    assert f.max_divergence() < 1e-12
    blocks = [bank.block(f, j) for j in range(-1, 4)]
    total = blocks[0]
    for b in blocks[1:]:
        total = total + b
    # the sum of blocks reproduces the band-limited part
    assert (bank.low_cutoff(f, 4) - total).l2() <= 1e-12 * f.l2()

    norm = bank.besov_norm(f, 0.0)
    assert math.isclose(bank.besov_norm(f * 3.0, 0.0), 3.0 * norm, rel_tol=1e-12)
    assert f.heat(0.1).l2() < f.l2()

    zero = mhd_py.Field.zeros(64)
    rep = mhd_py.lifespan(zero, zero)
    assert math.isinf(rep.t) and rep.branch == "small_data"
    assert json.loads(rep.json)["t"] == "inf"

    (u0, b0), = mhd_py.small_data(64, seed=11, size=0.01)
    rep = mhd_py.lifespan(u0, b0)
    sol = mhd_py.solve(u0, b0, rep.t, rep.t / 32)
    assert sol.converged and sol.bounds_hold, sol.history_json()
    print(f"solve: T = {rep.t:.4e}, {sol.iterations} Picard iterations, distances {sol.distances}")

    assert math.isclose(mhd_py.gronwall(0.1, 1.0), 0.1 * math.e)
    ode = mhd_py.comparison(0.05, 1.0, c=1.0)
    assert mhd_py.log_osgood(0.05, 1.0, 1.0) >= ode * (1 - 1e-9)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "pair.bin")
        mhd_py.save_fields(path, [u0, b0])
        u1, b1 = mhd_py.load_fields(path)
        assert u1 == u0 and b1 == b0

    print("smoke test passed")


if __name__ == "__main__":
    main()
