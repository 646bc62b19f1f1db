"""Brute-force reference computations used as test oracles.

These enumerate every request vector and every serve choice directly, with no
shared code path with the library's collapsed enumerators.
"""

import itertools
from fractions import Fraction

import numpy as np


def adjacency(g):
    return [g.neighbors(v).tolist() for v in range(g.n)]


def one_round(g, S, protocol):
    """Exact distribution of S_1 as {frozenset: Fraction} for 'pull' or 'rpull'."""
    adj = adjacency(g)
    S = frozenset(S)
    askers = [u for u in range(g.n) if u not in S and adj[u]]
    out = {}
    for choice in itertools.product(*(adj[u] for u in askers)):
        p_req = Fraction(1)
        for u in askers:
            p_req /= len(adj[u])
        hits = {}
        for u, v in zip(askers, choice):
            if v in S:
                hits.setdefault(v, []).append(u)
        if protocol == "pull":
            new = frozenset(u for rs in hits.values() for u in rs)
            out[S | new] = out.get(S | new, 0) + p_req
            continue
        servers = sorted(hits)
        for served in itertools.product(*(hits[v] for v in servers)):
            p = p_req
            for v in servers:
                p /= len(hits[v])
            key = S | frozenset(served)
            out[key] = out.get(key, 0) + p
    return out


def t_rounds(g, S, protocol, rounds):
    dist = {frozenset(S): Fraction(1)}
    for _ in range(rounds):
        nxt = {}
        for s, p in dist.items():
            for s2, q in one_round(g, s, protocol).items():
                nxt[s2] = nxt.get(s2, 0) + p * q
        dist = nxt
    return dist


def expected_time(g, S, protocol):
    """Expected broadcast time by solving the absorbing chain with numpy (float)."""
    full = frozenset(range(g.n))
    states, frontier = [frozenset(S)], [frozenset(S)]
    seen = {frozenset(S)}
    trans = {}
    while frontier:
        s = frontier.pop()
        trans[s] = one_round(g, s, protocol)
        for s2 in trans[s]:
            if s2 not in seen:
                seen.add(s2)
                states.append(s2)
                frontier.append(s2)
    live = [s for s in states if s != full]
    idx = {s: i for i, s in enumerate(live)}
    A = np.eye(len(live))
    for s in live:
        for s2, p in trans[s].items():
            if s2 in idx:
                A[idx[s], idx[s2]] -= float(p)
    sol = np.linalg.solve(A, np.ones(len(live)))
    return float(sol[idx[frozenset(S)]]) if frozenset(S) in idx else 0.0
