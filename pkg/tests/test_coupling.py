import numpy as np
import pytest

from rumorlab.coupling import (coupled_rows, coupled_run, estimate_violation_rate, marginal_check,
                               wilson_interval)
from rumorlab.engine import ProtocolSpec, simulate_batch
from rumorlab.errors import ConfigError
from rumorlab.graph import gen_basic, gen_lct
from rumorlab.vpull import VpullParams, default_params, vpull_batch


def test_star_never_violates():
    g = gen_basic("star", 9)
    rep = estimate_violation_rate(g, [0], default_params(g), 300, seed=1)
    assert rep.violation_count == 0 and rep.be_count == 0
    assert rep.ci[0] == 0.0 and rep.ci[1] < 0.02


def test_full_start_never_violates():
    g, _ = gen_lct(4)
    p = VpullParams(T=2, T_prime=1, K=1)
    rep = estimate_violation_rate(g, np.arange(g.n), p, 50)
    assert rep.violation_count == 0


def test_single_coupled_run():
    g = gen_basic("path", 5)
    run = coupled_run(g, [0], default_params(g), seed=3)
    assert not run.violated and run.cause is None
    assert set(run.S_vpull_T1.tolist()) <= set(run.S_rpull_T.tolist())
    assert set(run.row()) == {"seed", "trial", "violated", "BE", "S_rpull", "S_vpull", "cause"}


@pytest.mark.parametrize("make,S0,params,cause", [
    (lambda: gen_basic("star", 10), [0], VpullParams(T=1, T_prime=1, K=2), "bad-execution"),
    (lambda: gen_lct(8)[0], [1, 2], VpullParams(T=2, T_prime=1, K=50), "strongly-connected"),
])
def test_stress_params_produce_classified_violations(make, S0, params, cause):
    g = make()
    rep = estimate_violation_rate(g, S0, params, 300, seed=0)
    assert rep.nonstandard_params
    assert rep.violation_count > 0
    assert rep.causes[cause] == rep.violation_count
    rows = coupled_rows(g, S0, params, 300, seed=0)
    assert sum(r.violated for r in rows) == rep.violation_count
    for r in rows:
        extra = set(r.S_vpull_T1.tolist()) - set(r.S_rpull_T.tolist())
        assert r.violated == bool(extra)
        assert set(r.extra_nodes.tolist()) == extra


def test_coupled_sides_preserve_marginals():
    """Each side of the coupling is exactly the standalone process on the same counters."""
    g, _ = gen_lct(8)
    p = default_params(g, scale=1)
    p = VpullParams(T=6, T_prime=3, K=p.K)
    rows = coupled_rows(g, [0], p, 64, seed=5)
    rp = simulate_batch(g, [0], ProtocolSpec("rpull", "random", seed=5), np.arange(64), max_rounds=p.T)
    vp = vpull_batch(g, [0], p, np.arange(64), 5)
    for k, r in enumerate(rows):
        assert r.S_rpull_T.tolist() == np.flatnonzero(rp.informed[k]).tolist()
        assert r.S_vpull_T1.tolist() == np.flatnonzero(vp.informed[k]).tolist()
    a, b = marginal_check(g, [0], p, 64, seed=5)
    assert np.array_equal(a, rp.informed) and np.array_equal(b, vp.informed)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and 0.003 < hi < 0.005
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_bad_trials():
    g = gen_basic("path", 3)
    with pytest.raises(ConfigError):
        estimate_violation_rate(g, [0], default_params(g), 0)
