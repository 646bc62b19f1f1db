import math

import numpy as np
import pytest
from scipy.stats import binom

from rumorlab.experiments import (chernoff_grid, dominance_rounds, exp_coupling, exp_dominance,
                                  exp_separation, exp_tightness, exp_tree_full, exp_tree_path,
                                  quantile_rounds, small_suite, tree_bound)
from rumorlab.graph import gen_basic


def test_quantile_rounds():
    t = np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
    assert quantile_rounds(t, 0.9) == 9
    assert quantile_rounds(t, 0.99) == 10
    assert quantile_rounds(np.array([1, -1]), 0.99) == np.inf


def test_tree_path_q2_is_one_round():
    rep = exp_tree_path(2, trials=200)
    for name, r in rep["protocols"].items():
        assert r["mean"] == 1.0 and r["ratio"] == 1.0
    assert rep["exact_pull"] == 1.0


def test_tree_path_q3_close_to_exact():
    rep = exp_tree_path(3, trials=5000, seed=2)
    assert rep["exact_pull"] == 3.0 and rep["D_p"] == 4 and rep["D_p_minus_d_r"] == 3
    r = rep["protocols"]["pull"]
    assert abs(r["mean"] - 3.0) <= 3 * r["stderr"] + 1e-9


def test_tree_full_star_and_cbt():
    out = exp_tree_full(gen_basic("star", 40), trials=50)
    for r in out["protocols"].values():
        assert r["quantile_value"] == 39 and r["within_bound"]
    g = gen_basic("complete_binary_tree", 4)
    assert tree_bound(g) == 1 + 3 * 3 + 2 + 3 * 3 + 1 + 3 * math.log2(31)
    out = exp_tree_full(g, trials=300, seed=1)
    assert all(r["within_bound"] for r in out["protocols"].values())


def test_separation_small_run_metrics():
    rows = exp_separation((8,), trials=20, seed=1)
    r = rows[0]
    for label in ("random", "adversarial"):
        m = r[label]
        assert m["timeouts"] == 0
        assert m["X_monotone"] and m["X_max"] == 8
    assert r["adversarial"]["stall_violations"] == 0
    assert r["random_bound"] == 40 * math.log2(r["n"]) ** 2
    assert r["ratio"] == r["adversarial"]["median"] / r["random"]["median"]


def tight_round1_oracle(k):
    """Pr(a fixed A node is served in round 1) when every B node is informed.

    a picks some b; b also gets requests from each of the other k^2 - 1 A nodes w.p. 1/k^2
    and from each of its k^2 bridges w.p. 1/k; it serves a uniformly random requester.
    """
    k2 = k * k
    x = binom(k2 - 1, 1 / k2)
    y = binom(k2, 1 / k)
    return sum(x.pmf(i) * y.pmf(j) / (1 + i + j) for i in range(k2) for j in range(k2 + 1))


@pytest.mark.parametrize("k", [2, 3])
def test_tightness_round1_win_probability(k):
    rows = exp_tightness((k,), trials=6000, seed=3)
    r = rows[0]
    p = tight_round1_oracle(k)
    assert abs(r["round1_win_a0"] - p) <= 4 * math.sqrt(p * (1 - p) / 6000)
    assert r["pull_one_round_fraction"] == 1.0
    assert r["timeouts"] == 0 and r["m_star"] >= 2


def test_small_suite_shape():
    suite = small_suite()
    assert len(suite) == 10
    for name, g, S0 in suite:
        assert 1 <= g.n - len(set(S0)) <= 4
        assert g.min_degree >= 1
    assert dominance_rounds(gen_basic("path", 3)) == math.ceil(16 * math.log2(3))


def test_dominance_and_coupling_quick():
    rows = exp_dominance(samples=3000, seed=1)
    assert len(rows) == 10 and all(r["passed"] for r in rows)
    rows = exp_coupling(trials=60, seed=1)
    assert all(r["violation_rate"] == 0 and r["be_rate"] == 0 for r in rows)


def test_chernoff_grid_small():
    rows = chernoff_grid(samples=20_000)
    assert len(rows) == 9
    for r in rows:
        assert r["p"][1] == r["p"][2] == (1 + r["p1"]) / 2
        assert r["threshold"] == 3 * (r["mu"] + r["t"])
