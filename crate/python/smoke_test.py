"""Smoke test for the Python extension.

Build and install it first:

    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml

then run `python python/smoke_test.py` from the repository root.
"""

import json
import math
from pathlib import Path

import latecount as lc

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "crates" / "core" / "fixtures"


def check_fair_win():
    even = lc.fair_win_probability(500, 500)
    assert abs(even.probability() - 0.5) < 1e-12, even
    far = lc.fair_win_probability(744_459, 835_199)
    assert far.log10 < -2000 and far.asymptotic, far
    assert str(far).startswith("1e-22")
    quad = lc.fair_win_probability_quadrature(300, 340)
    closed = lc.fair_win_probability(300, 340)
    assert abs(quad.log10 - closed.log10) < 1e-6 * abs(closed.log10)
    assert abs(lc.log_normal_tail(10.0).log10 + 23.11805) < 1e-4
    print("fair win      ", even, far, closed)


def check_distribution():
    xs = [0.0, 10.0, 20.0, 40.0, 80.0]
    ws = [5, 2, 1, 1, 1]
    dist = lc.DistanceDistribution(xs, ws)
    assert len(dist) == 5 and dist.x_max == 80.0
    mean = sum(x * w for x, w in zip(xs, ws)) / sum(ws)
    var = sum(w * (x - mean) ** 2 for x, w in zip(xs, ws)) / sum(ws)
    assert math.isclose(dist.gip_lower_bound(), var / (mean - 80.0), rel_tol=1e-12)
    assert not dist.conjecture_all_geo()
    moments = dist.moments()
    assert math.isclose(moments["mean"], mean)

    plan = lc.ResamplePlan("subsample", sample_size=3, replicates=1000, seed=42)
    est = lc.probability_all_geo(dist, plan)
    assert est["method"] == "exact" and 0.0 <= est["fraction"] <= 1.0
    again = lc.probability_all_geo(dist, lc.ResamplePlan("bootstrap", 3, 500, 7, parallel=False))
    assert again["replicates"] == 500
    assert again == lc.probability_all_geo(dist, lc.ResamplePlan("bootstrap", 3, 500, 7))

    v_h, v_n = lc.eval_halftime_shares("linear:0.005", dist)
    big_h, big_n = lc.eval_final_shares("linear:0.005", dist)
    assert math.isclose(big_h + big_n, 1.0)
    assert v_h < v_n
    rows = lc.sweep_model_params("exp2", dist)
    assert len(rows) == 256 and {r["form"] for r in rows} == {"exp2"}
    # steep h puts its mass on the atom at x_M, which g ignores
    assert any(r["flag"] for r in rows if r["param1"] == 1.0)
    print("distribution  ", dist, est["fraction"], again["fraction"])


def check_fit():
    xs = [1.0, 5.0, 10.0, 20.0, 40.0, 60.0]
    shares = [0.40 + 0.002 * x for x in xs]
    fit = lc.fit_h_linear(xs, shares, weights=[100, 80, 60, 40, 20, 10])
    assert math.isclose(fit["c_hat"], 0.40) and math.isclose(fit["m_hat"], 0.002)
    ratios = lc.bootstrap_c_over_m(xs, shares, lc.ResamplePlan("bootstrap", 6, 50, 1))
    assert len(ratios) == 50
    assert all(r is None or math.isclose(r, 200.0) for r in ratios)
    window = lc.probability_gip_window(ratios, lower=-30.0, delta=-0.05)
    assert window["applicable"]
    print("fit           ", fit, window)


def check_analysis():
    config = {"nvc": [1], "plan": {"mode": "subsample", "sample_size": 20, "replicates": 500, "seed": 42}}
    report = json.loads(lc.run_analysis(
        json.dumps(config),
        (FIXTURES / "honduras_settlements.csv").read_text(),
        (FIXTURES / "honduras_tallies.csv").read_text(),
    ))
    rows = {(r["unit"], r["nvc"]): r for r in report["rows"]}
    assert len(rows) == 19
    assert rows[("country", 1)]["prong3"]["fraction"] < 1e-4
    assert rows[("HN-GD", 1)]["prong3"]["fraction"] > 0.01
    try:
        lc.run_analysis('{"nvcs": [1]}')
    except ValueError as e:
        assert "nvcs" in str(e)
    else:
        raise AssertionError("unknown config field accepted")
    print("analysis      ", len(report["rows"]), "rows; country prong 1:", rows[("country", 1)]["prong1"]["normalized"])


if __name__ == "__main__":
    check_fair_win()
    check_distribution()
    check_fit()
    check_analysis()
    print("ok")
