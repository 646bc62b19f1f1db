"""Desk-scale experiments: tree bounds, separation, tightness, coupling, dominance, Chernoff."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dominance as dom
from .chernoff import chernoff_geo_bound, empirical_tail
from .coupling import estimate_violation_rate
from .engine import LowestIdAdversary, ProtocolSpec, run_trials, stalling_adversary
from .errors import ConfigError, GraphError
from .graph import (Graph, gen_basic, gen_separation, gen_tightness, is_tree,
                    max_path_degree_sum, path_degree_sum)
from .vpull import default_params

TREE_PROTOCOLS = ("pull", "rpull-random", "rpull-adversarial")


def _spec(name, max_rounds, seed, adversary=None):
    return ProtocolSpec.from_name(name, adversary=adversary, max_rounds=max_rounds, seed=seed)


def _times_inf(times):
    t = times.astype(float)
    t[times < 0] = np.inf
    return t


def quantile_rounds(times, q):
    """Smallest m with Pr(time <= m) >= q (timeouts count as never)."""
    t = np.sort(_times_inf(times))
    idx = max(0, math.ceil(q * len(t)) - 1)
    return t[idx]


# ---------------------------------------------------------------------------
# trees

def exp_tree_path(q, trials=10_000, seed=0, exact_limit=12):
    """Broadcast time on a q-node path from one endpoint, three pull protocols."""
    if q < 2:
        raise ConfigError("bad-size", "q must be >= 2")
    g = gen_basic("path", q)
    path = list(range(q))
    dp = path_degree_sum(g, path)
    target = dp - g.degree(0)
    max_rounds = max(100, 20 * dp)
    report = {"q": q, "trials": trials, "seed": seed, "D_p": dp, "D_p_minus_d_r": target,
              "protocols": {}}
    if q - 1 <= exact_limit:
        report["exact_pull"] = float(dom.expected_broadcast_time(g, [0], "pull"))
    for name in TREE_PROTOCOLS:
        adv = LowestIdAdversary() if name.endswith("adversarial") else None
        res = run_trials(g, [0], _spec(name, max_rounds, seed, adv), trials)
        t = res.times[res.times >= 0].astype(float)
        report["protocols"][name] = {
            "mean": float(t.mean()), "stderr": float(t.std(ddof=1) / math.sqrt(len(t))) if len(t) > 1 else 0.0,
            "ratio": float(t.mean() / target), "timeouts": res.timeouts,
        }
    return report


def tree_bound(g: Graph):
    """max over all paths of D_p plus Delta * log2 n (leading constant 1)."""
    return max_path_degree_sum(g) + g.max_degree * math.log2(g.n)


def exp_tree_full(g: Graph, trials=10_000, seed=0, root=0, q=0.99):
    if not is_tree(g):
        raise GraphError("not-a-tree", "exp_tree_full needs a tree")
    bound = tree_bound(g)
    max_rounds = int(10 * bound) + 10
    out = {"n": g.n, "root": root, "bound": bound, "quantile": q, "protocols": {}}
    for name in ("rpull-random", "rpull-adversarial"):
        adv = LowestIdAdversary() if name.endswith("adversarial") else None
        res = run_trials(g, [root], _spec(name, max_rounds, seed, adv), trials)
        qv = quantile_rounds(res.times, q)
        out["protocols"][name] = {"quantile_value": float(qv), "max": float(_times_inf(res.times).max()),
                                  "within_bound": bool(qv <= bound), "timeouts": res.timeouts}
    return out


# ---------------------------------------------------------------------------
# separation

@dataclass
class SeparationMetrics:
    """Per-trial traces of one separation run batch."""
    X: list = field(default_factory=list)           # per round: (B,) informed D_i count
    r_zeta_round: np.ndarray | None = None          # first round r_zeta is informed, -1 never
    zeta_first: np.ndarray | None = None            # first round any D_zeta node is informed
    zeta_full: np.ndarray | None = None             # round all of D_zeta is informed
    stall_violations: int = 0                       # r served r_zeta while a D_i leaf requested r

    def x_matrix(self):
        return np.stack(self.X, axis=1) if self.X else np.empty((0, 0), dtype=np.int64)


def _separation_observer(g, lay, B):
    blk0 = lay.blocks[0].offset
    span = lay.blocks[0].size
    di = slice(blk0, blk0 + span * lay.m)
    zeta = lay.zeta.nodes
    met = SeparationMetrics(r_zeta_round=np.full(B, -1), zeta_first=np.full(B, -1),
                            zeta_full=np.full(B, -1))

    def on_round(t, inf2d, batch):
        met.X.append(inf2d[:, di].reshape(-1, lay.m, span).any(axis=2).sum(axis=1))
        rz = inf2d[:, lay.r_zeta] & (met.r_zeta_round < 0)
        met.r_zeta_round[rz] = t
        cnt = inf2d[:, zeta].sum(axis=1)
        first = (cnt > 0) & (met.zeta_first < 0)
        met.zeta_first[first] = t
        full = (cnt == len(zeta)) & (met.zeta_full < 0)
        met.zeta_full[full] = t

    leaf_i = np.zeros(g.n, dtype=bool)
    for d in lay.blocks:
        leaf_i[d.leaf_nodes] = True

    def serve_hook(t, rows, servers, starts, sizes, members, picks):
        at_r = np.flatnonzero(servers == lay.r)
        for gi in at_r:
            grp = members[starts[gi]:starts[gi] + sizes[gi]]
            if lay.r_zeta in grp and leaf_i[grp].any() and members[picks[gi]] == lay.r_zeta:
                met.stall_violations += 1

    return met, on_round, serve_hook


def _median(times):
    return float(np.median(_times_inf(times)))


def exp_separation(l_values=(16, 32), c=1, trials=200, seed=0, source="r_alpha", doubled=False,
                   timeout_factor=50):
    """Random vs stalling-adversary RPULL medians on the separation graph."""
    rows = []
    for l in l_values:
        g, lay = gen_separation(l, c, doubled)
        roles = lay.role_nodes()
        if source not in roles:
            raise ConfigError("bad-source", f"source must be one of {sorted(roles)}")
        s0 = [roles[source]]
        max_rounds = int(timeout_factor * math.sqrt(g.n))
        row = {"l": l, "c": c, "n": g.n, "edges": g.num_edges, "source": source,
               "doubled": doubled, "timeout": max_rounds, "trials": trials}
        for label, name, adv in (("random", "rpull-random", None),
                                 ("adversarial", "rpull-adversarial", stalling_adversary(lay))):
            t0 = time.perf_counter()
            met, on_round, hook = _separation_observer(g, lay, trials)
            res = run_trials(g, s0, _spec(name, max_rounds, seed, adv), trials, chunk=trials,
                             on_round=on_round, serve_hook=hook if adv else None)
            X = met.x_matrix()
            fill = met.zeta_full - met.zeta_first
            row[label] = {
                "median": _median(res.times),
                "mean": float(res.times[res.times >= 0].mean()) if (res.times >= 0).any() else None,
                "timeouts": res.timeouts,
                "r_zeta_median": float(np.median(np.where(met.r_zeta_round < 0, np.inf, met.r_zeta_round))),
                "zeta_fill_median": float(np.median(np.where(fill < 0, np.inf, fill))) if len(fill) else None,
                "zeta_fill_max": float(np.max(np.where(met.zeta_full < 0, np.inf, fill))) if len(fill) else None,
                "X_monotone": bool(X.size == 0 or np.all(np.diff(X, axis=1) >= 0)),
                "X_max": int(X.max()) if X.size else 0,
                "stall_violations": met.stall_violations,
                "seconds": time.perf_counter() - t0,
            }
        row["ratio"] = row["adversarial"]["median"] / row["random"]["median"]
        row["random_bound"] = 40 * math.log2(g.n) ** 2
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# tightness

def exp_tightness(k_values=(4, 6, 8), trials=1000, seed=0, q=0.99, max_rounds=None):
    rows = []
    for k in k_values:
        g, lay = gen_tightness(k)
        S0 = lay.B
        ratio = g.max_degree / g.min_degree
        scale = ratio * math.log2(g.n)
        mr = max_rounds or int(40 * scale)
        res = run_trials(g, S0, _spec("rpull-random", mr, seed), trials, targets=lay.A)
        m_star = quantile_rounds(res.times, q)
        one = run_trials(g, S0, _spec("rpull-random", 1, seed), trials, targets=lay.A, keep_sets=True,
                         max_rounds=1)
        win_a0 = float(one.informed[:, lay.A[0]].mean())
        win_any = float(one.informed[:, lay.A].mean())
        pull = run_trials(g, S0, _spec("pull", 1, seed), trials, targets=lay.A, max_rounds=1)
        rows.append({
            "k": k, "n": g.n, "delta": g.min_degree, "Delta": g.max_degree, "trials": trials,
            "m_star": float(m_star), "timeouts": res.timeouts,
            "scale_Delta_over_delta_log_n": scale, "m_star_over_scale": float(m_star / scale),
            "round1_win_a0": win_a0, "round1_win_mean": win_any,
            "pull_one_round_fraction": float(np.mean(pull.times == 1)),
        })
    return rows


# ---------------------------------------------------------------------------
# small suite: coupling and dominance

def small_suite():
    """Ten small instances with at most four uninformed nodes: (name, graph, S0)."""
    def frag(edges, n, S0):
        return Graph.from_edges(n, edges), S0

    suite = [
        ("path3", gen_basic("path", 3), [0]),
        ("path4", gen_basic("path", 4), [0]),
        ("path5-mid", gen_basic("path", 5), [2]),
        ("star5-center", gen_basic("star", 5), [0]),
        ("star5-leaf", gen_basic("star", 5), [1]),
        ("complete5", gen_basic("complete", 5), [0]),
        ("complete4-two", gen_basic("complete", 4), [0, 1]),
        ("cbt2-top", gen_basic("complete_binary_tree", 2), [0, 1, 2]),
    ]
    # a1=0 a2=1 b1=2 b2=3 t1=4 t2=5 x1=6 x2=7: two B nodes, each with one bridged 2-clique
    g, S0 = frag([(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 7)], 8, [2, 3, 6, 7])
    suite.append(("tight-2x2", g, S0))
    # a=0 b=1 bridges 2,3,4 with mates 5,6,7: one B node serving a against three bridges
    g, S0 = frag([(0, 1), (1, 2), (1, 3), (1, 4), (2, 5), (3, 6), (4, 7)], 8, [1, 5, 6, 7])
    suite.append(("tight-fan", g, S0))
    return suite


def dominance_rounds(g: Graph):
    """T = ceil(8 (Delta/delta) log2 n)."""
    return math.ceil(8 * g.max_degree / g.min_degree * math.log2(g.n))


def exp_dominance(samples=100_000, seed=0, threshold_sigma=3.0, suite=None):
    rows = []
    for name, g, S0 in suite or small_suite():
        T = dominance_rounds(g)
        exact = dom.exact_distribution(g, S0, "pull", 1)
        res = run_trials(g, S0, _spec("rpull-random", T, seed), samples, keep_sets=True, max_rounds=T)
        U = list(exact.U)
        rep = dom.empirical_dominance_test(res.informed[:, U], exact, U, threshold_sigma)
        rows.append({"graph": name, "n": g.n, "U": U, "T": T, "samples": samples,
                     "worst_sigma": rep["worst_sigma"], "worst_gap": rep["worst_gap"],
                     "worst_family": rep["worst_family"], "passed": rep["passed"]})
    return rows


def exp_coupling(trials=1000, seed=0, suite=None, scale=1):
    rows = []
    for name, g, S0 in suite or small_suite():
        params = default_params(g, scale)
        rep = estimate_violation_rate(g, S0, params, trials, seed)
        rows.append({"graph": name, "n": g.n, "T": params.T, "T_prime": params.T_prime, "K": params.K,
                     "trials": trials, "violations": rep.violation_count,
                     "violation_rate": rep.violation_rate, "ci_low": rep.ci[0], "ci_high": rep.ci[1],
                     "be_rate": rep.be_rate, "causes": rep.causes,
                     "nonstandard_params": rep.nonstandard_params})
    return rows


# ---------------------------------------------------------------------------
# Chernoff

CHERNOFF_P1 = (0.1, 0.3, 0.5)
CHERNOFF_T = (0.0, 2.0, 5.0)


def chernoff_grid(samples=1_000_000, seed=0, p1_values=CHERNOFF_P1, t_values=CHERNOFF_T):
    """For each (p1, t): bound vs sampled tail for p = (p1, (1+p1)/2, (1+p1)/2)."""
    rows = []
    for i, p1 in enumerate(p1_values):
        ps = [p1, (1 + p1) / 2, (1 + p1) / 2]
        for j, t in enumerate(t_values):
            bound, mu = chernoff_geo_bound(ps, t)
            emp = empirical_tail(ps, t, samples, seed=seed + 97 * i + j)
            rows.append({"p1": p1, "p": ps, "t": t, "mu": mu, "threshold": 3 * (mu + t),
                         "bound": bound, "empirical": emp, "ok": emp <= bound})
    return rows
