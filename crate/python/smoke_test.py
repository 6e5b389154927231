"""Smoke test for the rgather_py extension module.

Build and install the module first, for example with
    maturin develop --release -m crates/rgather-py/Cargo.toml
then run
    python python/smoke_test.py
"""

import json

import rgather_py as rg


def check_offline():
    p = rg.PointSet([[0.0], [1.0], [10.0], [11.0]])
    assert len(p) == 4 and p.dim == 1
    assert p.rho_r(0, 2) == 1.0
    out = rg.rgather(p, 2)
    assert out["schema"] == "rgather/1"
    assert sorted(sorted(c["members"]) for c in out["clusters"]) == [[0, 1], [2, 3]]
    assert out["max_radius"] == 1.0
    assert rg.brute_force_opt_radius(p, 2) == 1.0

    rep = rg.verify(p, json.dumps(out), 2)
    assert rep["ok"], rep["problems"]

    q = rg.PointSet([[0.0], [1.0], [10.0], [11.0], [50.0]])
    out = rg.rgather_outliers(q, 2, 1)
    assert out["outliers"] == [4]

    blobs = rg.gaussian_blobs(120, d=3, blobs=4, seed=7)
    a = rg.rgather(blobs, 5, mode="lsh", seed=3, report_cost=True)
    b = rg.rgather(blobs, 5, mode="lsh", seed=3, report_cost=True)
    assert a == b and a["cost_report"]["rounds"] > 0
    pw = rg.rgather_pointwise(blobs, 4, power=2)
    assert min(len(c["members"]) for c in pw["clusters"]) >= 4
    assert pw["power_cost"]["k"] == 2

    try:
        rg.rgather(p, 9)
    except rg.InfeasibleError:
        pass
    else:
        raise AssertionError("r larger than n must be infeasible")


def check_dynamic():
    s = rg.DynRGather(2, 2)
    for i, c in enumerate([[0, 0], [1, 0], [20, 20], [21, 20], [40, 0]]):
        s.insert(i, [float(x) for x in c])
    s.check_invariants()
    center, bound = s.query(0)
    assert bound > 0 and center in s
    clustering, bound = s.query_all()
    assert all(len(c["members"]) >= 2 for c in clustering["clusters"])
    s.delete(4)
    assert len(s) == 4 and 4 not in s
    try:
        s.delete(99)
    except KeyError:
        pass
    else:
        raise AssertionError("unknown ids must raise KeyError")

    net = rg.NavigatingNet(2)
    for i in range(20):
        net.insert(i, [float(i), float(i * i % 7)])
    net.check_invariants()
    nid, d = net.ann([3.2, 2.0], eps=0.1)
    assert nid in net and d >= 0.0

    doc = rg.replay("I 0 0\nI 1 1\nI 10 10\nI 11 11\nQALL\n", 2)
    assert len(doc["clusters"]) == 2


if __name__ == "__main__":
    check_offline()
    check_dynamic()
    print("rgather_py smoke test passed")
