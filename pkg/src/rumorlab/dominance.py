"""Exact first-order stochastic dominance on the subset lattice 2^U.

Subsets of the ground set ``U = (u_0, ..., u_{k-1})`` are bitmasks over
positions: bit ``j`` set means ``u_j`` is in the set. Probabilities are
``fractions.Fraction`` throughout; floats appear only in the Monte Carlo
surrogate :func:`empirical_dominance_test`.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from functools import lru_cache, reduce

import networkx as nx
import numpy as np

from .errors import ExactError
from .graph import Graph

MAX_EXACT_U = 12
MAX_UPSET_U = 5
MAX_HOLLEY_U = 8
MAX_DIST_U = 8
MAX_DIST_ROUNDS = 4


def popcount(x: int) -> int:
    return bin(x).count("1")


class OutcomeDistribution:
    """Exact probability distribution over subsets of a ground set ``U``."""

    def __init__(self, U, probs: dict, check=True):
        self.U = tuple(int(u) for u in U)
        self.k = len(self.U)
        if self.k > MAX_EXACT_U:
            raise ExactError("too-large-exact", f"|U| = {self.k} > {MAX_EXACT_U}")
        self.probs = {int(m): Fraction(p) for m, p in probs.items() if Fraction(p) != 0}
        if check:
            self.validate()

    def validate(self):
        full = (1 << self.k) - 1
        for m, p in self.probs.items():
            if p < 0:
                raise ExactError("bad-distribution", f"negative mass on {m}")
            if m & ~full:
                raise ExactError("bad-distribution", f"subset {m} outside U")
        total = sum(self.probs.values(), Fraction(0))
        if total != 1:
            raise ExactError("bad-distribution", f"masses sum to {total}, not 1")

    # --- constructors -------------------------------------------------------
    @classmethod
    def point_mass(cls, U, subset_mask):
        return cls(U, {subset_mask: 1})

    @classmethod
    def uniform(cls, U):
        k = len(U)
        return cls(U, {m: Fraction(1, 2 ** k) for m in range(2 ** k)})

    @classmethod
    def product(cls, U, ps):
        """Independent inclusion of ``U[j]`` with probability ``ps[j]``."""
        ps = [Fraction(p) for p in ps]
        out = {}
        for m in range(2 ** len(U)):
            w = Fraction(1)
            for j, p in enumerate(ps):
                w *= p if m >> j & 1 else 1 - p
            out[m] = w
        return cls(U, out)

    @classmethod
    def from_json(cls, text_or_obj):
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        return cls(obj["U"], {int(m): Fraction(p) for m, p in obj["probs"].items()})

    # --- accessors ------------------------------------------------------------
    def __getitem__(self, m):
        return self.probs.get(int(m), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, OutcomeDistribution) and self.U == other.U and self.probs == other.probs

    def __repr__(self):
        body = ", ".join(f"{self.subset(m)}: {p}" for m, p in sorted(self.probs.items()))
        return f"OutcomeDistribution(U={self.U}, {{{body}}})"

    @property
    def support(self):
        return sorted(self.probs)

    @property
    def strictly_positive(self):
        return len(self.probs) == 2 ** self.k

    def vector(self):
        return [self[m] for m in range(2 ** self.k)]

    def subset(self, m) -> frozenset:
        return frozenset(u for j, u in enumerate(self.U) if m >> j & 1)

    def mask(self, nodes) -> int:
        pos = {u: j for j, u in enumerate(self.U)}
        return sum(1 << pos[int(u)] for u in nodes)

    def marginal(self, u) -> Fraction:
        bit = 1 << self.U.index(int(u))
        return sum((p for m, p in self.probs.items() if m & bit), Fraction(0))

    def prob_contains(self, M) -> Fraction:
        """Pr(M subset of A)."""
        mm = self.mask(M)
        return sum((p for m, p in self.probs.items() if m & mm == mm), Fraction(0))

    def prob_family(self, family: int) -> Fraction:
        """Probability of a family given as a bitset over subset indices."""
        return sum((p for m, p in self.probs.items() if family >> m & 1), Fraction(0))

    def expectation(self, f) -> Fraction:
        return sum((p * Fraction(f(m)) for m, p in self.probs.items()), Fraction(0))

    def restrict(self, keep):
        """Marginal distribution on the sub-ground-set ``keep``."""
        keep = [int(u) for u in keep]
        pos = [self.U.index(u) for u in keep]
        out = {}
        for m, p in self.probs.items():
            mm = sum(1 << i for i, j in enumerate(pos) if m >> j & 1)
            out[mm] = out.get(mm, Fraction(0)) + p
        return OutcomeDistribution(keep, out)

    def to_json(self):
        return {"U": list(self.U), "probs": {str(m): str(p) for m, p in sorted(self.probs.items())}}


def _same_ground(d1, d2):
    if d1.U != d2.U:
        raise ExactError("bad-distribution", "distributions live on different ground sets")


def _lcd_ints(*dists):
    L = reduce(math.lcm, (p.denominator for d in dists for p in d.probs.values()), 1)
    return L, [[int(p * L) for p in d.vector()] for d in dists]


# ---------------------------------------------------------------------------
# monotone families

@lru_cache(maxsize=None)
def upsets(k: int) -> tuple:
    """Every up-set of 2^[k] as a bitset over the 2^k subset indices."""
    if k == 0:
        return (0, 1)
    prev = upsets(k - 1)
    half = 1 << (k - 1)
    return tuple(f0 | (f1 << half) for f1 in prev for f0 in prev if f0 & ~f1 == 0)


def family_members(family: int, k: int) -> list:
    return [m for m in range(2 ** k) if family >> m & 1]


def is_upset(family: int, k: int) -> bool:
    for m in range(2 ** k):
        if family >> m & 1:
            for j in range(k):
                if not family >> (m | 1 << j) & 1:
                    return False
    return True


def is_increasing(f_table, k) -> bool:
    return all(f_table[m | 1 << j] >= f_table[m] for m in range(2 ** k) for j in range(k))


# ---------------------------------------------------------------------------
# dominance checks

def check_increasing_expectation(d1, d2, f) -> bool:
    """E_{d1}[f] >= E_{d2}[f] for an increasing ``f`` (table indexed by mask, or callable)."""
    _same_ground(d1, d2)
    k = d1.k
    if callable(f):
        table = [Fraction(f(m)) for m in range(2 ** k)]
    elif isinstance(f, dict):
        table = [Fraction(f.get(m, f.get(d1.subset(m), 0))) for m in range(2 ** k)]
    else:
        table = [Fraction(x) for x in f]
    if not is_increasing(table, k):
        raise ExactError("not-increasing", "f decreases somewhere on the lattice")
    return d1.expectation(lambda m: table[m]) >= d2.expectation(lambda m: table[m])


def strassen_witness(d1, d2):
    """(holds, worst family, deficit) with deficit = max over up-sets of Pr2(F) - Pr1(F)."""
    _same_ground(d1, d2)
    if d1.k > MAX_UPSET_U:
        raise ExactError("too-large-exact", f"|U| = {d1.k} > {MAX_UPSET_U} for up-set enumeration")
    L, (a, b) = _lcd_ints(d1, d2)
    diff = [y - x for x, y in zip(a, b)]
    worst, worst_f = None, None
    for fam in upsets(d1.k):
        s, m, bits = 0, 0, fam
        while bits:
            if bits & 1:
                s += diff[m]
            bits >>= 1
            m += 1
        if worst is None or s > worst:
            worst, worst_f = s, fam
    deficit = Fraction(worst, L)
    return deficit <= 0, worst_f, deficit


def check_strassen_monotone_sets(d1, d2) -> bool:
    """Pr_{d1}(F) >= Pr_{d2}(F) for every monotone family F."""
    return strassen_witness(d1, d2)[0]


class CouplingPlan:
    """Joint law of ``(lower, upper)`` with ``lower`` ~ dominated and ``upper`` ~ dominating."""

    def __init__(self, U, joint: dict):
        self.U = tuple(U)
        self.joint = {k: Fraction(v) for k, v in joint.items() if v != 0}

    @property
    def monotone(self):
        return all(lo & ~up == 0 for lo, up in self.joint)

    def marginals(self):
        lo, up = {}, {}
        for (a, b), p in self.joint.items():
            lo[a] = lo.get(a, Fraction(0)) + p
            up[b] = up.get(b, Fraction(0)) + p
        return OutcomeDistribution(self.U, lo), OutcomeDistribution(self.U, up)

    def to_json(self):
        return {"U": list(self.U),
                "pairs": [[a, b, str(p)] for (a, b), p in sorted(self.joint.items())]}


def find_monotone_coupling(d1_dominating, d2_dominated):
    """Monotone coupling by max-flow, or ``None`` when none exists."""
    d1, d2 = d1_dominating, d2_dominated
    d1.validate()
    d2.validate()
    _same_ground(d1, d2)
    L, (a, b) = _lcd_ints(d1, d2)
    G = nx.DiGraph()
    top = [m for m in range(2 ** d1.k) if a[m]]
    for m in range(2 ** d1.k):
        if b[m]:
            G.add_edge("s", ("lo", m), capacity=b[m])
            for M in top:
                if m & ~M == 0:
                    G.add_edge(("lo", m), ("up", M))  # uncapacitated
    for M in top:
        G.add_edge(("up", M), "t", capacity=a[M])
    value, flow = nx.maximum_flow(G, "s", "t")
    if value != L:
        return None
    joint = {}
    for node, out in flow.items():
        if isinstance(node, tuple) and node[0] == "lo":
            for (_, M), f in out.items():
                if f:
                    joint[(node[1], M)] = Fraction(f, L)
    return CouplingPlan(d1.U, joint)


def _require_positive(*dists):
    for d in dists:
        if not d.strictly_positive:
            raise ExactError("not-strictly-positive", "every subset needs positive mass")


def holley_witness(mu1, mu2):
    """First pair (A, B) violating mu1(A|B) mu2(A&B) >= mu1(A) mu2(B), or None."""
    _same_ground(mu1, mu2)
    if mu1.k > MAX_HOLLEY_U:
        raise ExactError("too-large-exact", f"|U| = {mu1.k} > {MAX_HOLLEY_U}")
    _require_positive(mu1, mu2)
    _, (a, b) = _lcd_ints(mu1, mu2)
    N = 2 ** mu1.k
    for A in range(N):
        for B in range(N):
            if a[A | B] * b[A & B] < a[A] * b[B]:
                return A, B
    return None


def check_holley(mu1, mu2) -> bool:
    """Lattice condition under which mu1 dominates mu2."""
    return holley_witness(mu1, mu2) is None


def quotient_rule_witness(mu1, mu2):
    """First (A, B, x) with mu1(A+x)/mu1(A-x) < mu2(B+x)/mu2(B-x), or None."""
    _same_ground(mu1, mu2)
    if mu1.k > MAX_HOLLEY_U:
        raise ExactError("too-large-exact", f"|U| = {mu1.k} > {MAX_HOLLEY_U}")
    _require_positive(mu1, mu2)
    _, (a, b) = _lcd_ints(mu1, mu2)
    N = 2 ** mu1.k
    for j in range(mu1.k):
        bit = 1 << j
        rest = [m for m in range(N) if not m & bit]
        for A in rest:
            for B in rest:
                if a[A | bit] * b[B] < b[B | bit] * a[A]:
                    return A, B, j
    return None


def quotient_rule_check(mu1, mu2) -> bool:
    return quotient_rule_witness(mu1, mu2) is None


# ---------------------------------------------------------------------------
# worked counterexample

def counterexample_distributions(epsilon):
    """Two laws on {a, b, c} with equal singleton marginals where neither dominates.

    d1 puts 1/8 + eps on {a,b,c}, {a}, {b}, {c} and 1/8 - eps on the rest; d2 is uniform.
    """
    eps = Fraction(epsilon)
    if not 0 <= eps < Fraction(1, 8):
        raise ExactError("bad-epsilon", "epsilon must lie in [0, 1/8)")
    U = (0, 1, 2)
    d1 = {m: Fraction(1, 8) + (eps if popcount(m) % 2 == 1 else -eps) for m in range(8)}
    return OutcomeDistribution(U, d1), OutcomeDistribution.uniform(U)


# ---------------------------------------------------------------------------
# exact protocol distributions

def informative_nodes(g: Graph, S) -> list:
    """Uninformed u with 0 < d_S(u) < d(u), the nodes whose one-round fate is random."""
    mask = np.zeros(g.n, dtype=bool)
    mask[list(S)] = True
    dS = g.informed_degrees(mask)
    return [int(u) for u in np.flatnonzero(~mask & (dS > 0) & (dS < g.degrees))]


def _pull_step(g, informed: frozenset, U):
    """One PULL round from ``informed``: dict new-informed-mask -> probability."""
    out = {0: Fraction(1)}
    for j, u in enumerate(U):
        if u in informed:
            continue
        nb = g.neighbors(u)
        p = Fraction(sum(1 for v in nb if int(v) in informed), len(nb)) if len(nb) else Fraction(0)
        if p == 0:
            continue
        nxt = {}
        for m, w in out.items():
            if p != 1:
                nxt[m] = nxt.get(m, 0) + w * (1 - p)
            nxt[m | 1 << j] = nxt.get(m | 1 << j, 0) + w * p
        out = nxt
    return out


def _rpull_step(g, informed: frozenset, U):
    """One random-RPULL round: requests to specific informed neighbours, uniform serve."""
    pos = {u: j for j, u in enumerate(U)}
    options = []  # per uninformed requester: list of (server or None, prob)
    req_nodes = []
    for u in U:
        if u in informed:
            continue
        nb = [int(v) for v in g.neighbors(u)]
        if not nb:
            continue
        inf_nb = [v for v in nb if v in informed]
        if not inf_nb:
            continue
        opts = [(v, Fraction(1, len(nb))) for v in inf_nb]
        miss = Fraction(len(nb) - len(inf_nb), len(nb))
        if miss:
            opts.append((None, miss))
        options.append(opts)
        req_nodes.append(u)
    out = {}
    for combo in itertools.product(*options):
        w = Fraction(1)
        groups = {}
        for u, (v, p) in zip(req_nodes, combo):
            w *= p
            if v is not None:
                groups.setdefault(v, []).append(u)
        if not groups:
            out[0] = out.get(0, 0) + w
            continue
        lists = list(groups.values())
        share = w / math.prod(len(x) for x in lists)
        for pick in itertools.product(*lists):
            m = sum(1 << pos[u] for u in pick)
            out[m] = out.get(m, 0) + share
    return out


_STEPS = {"pull": _pull_step, "rpull_random": _rpull_step, "rpull": _rpull_step}


def _check_guard(g, S0, rounds):
    S0 = frozenset(int(s) for s in S0)
    if not S0:
        raise ExactError("bad-start", "S0 must be nonempty")
    U = tuple(v for v in range(g.n) if v not in S0)
    if len(U) > MAX_DIST_U or rounds > MAX_DIST_ROUNDS:
        raise ExactError("too-large-exact",
                         f"|U| = {len(U)} (max {MAX_DIST_U}), rounds = {rounds} (max {MAX_DIST_ROUNDS})")
    return S0, U


def transition(g: Graph, S0, U, state_mask, protocol):
    """Distribution of the next state (mask over U) from ``state_mask``."""
    informed = frozenset(S0) | frozenset(u for j, u in enumerate(U) if state_mask >> j & 1)
    step = _STEPS[protocol](g, informed, U)
    return {state_mask | m: p for m, p in step.items()}


def exact_distribution(g: Graph, S0, protocol="pull", rounds=1) -> OutcomeDistribution:
    """Exact law of the informed subset of U = V minus S0 after ``rounds`` rounds."""
    if protocol not in _STEPS:
        raise ExactError("bad-protocol", f"exact distributions support pull and rpull_random, not {protocol!r}")
    S0, U = _check_guard(g, S0, rounds)
    dist = {0: Fraction(1)}
    cache = {}
    for _ in range(rounds):
        nxt = {}
        for s, w in dist.items():
            if s not in cache:
                cache[s] = transition(g, S0, U, s, protocol)
            for s2, p in cache[s].items():
                nxt[s2] = nxt.get(s2, 0) + w * p
        dist = nxt
    return OutcomeDistribution(U, dist)


def expected_broadcast_time(g: Graph, S0, protocol="pull") -> Fraction:
    """Exact E[first t with S_t = V] via the absorbing chain on subsets of U."""
    if protocol not in _STEPS:
        raise ExactError("bad-protocol", f"unsupported protocol {protocol!r}")
    S0 = frozenset(int(s) for s in S0)
    U = tuple(v for v in range(g.n) if v not in S0)
    if len(U) > 16:
        raise ExactError("too-large-exact", f"|U| = {len(U)} > 16")
    full = (1 << len(U)) - 1
    E = {full: Fraction(0)}
    for s in sorted(range(full), key=popcount, reverse=True):
        P = transition(g, S0, U, s, protocol)
        stay = P.get(s, Fraction(0))
        if stay == 1:
            raise ExactError("unreachable", "some nodes can never be informed")
        acc = Fraction(1) + sum((p * E[s2] for s2, p in P.items() if s2 != s), Fraction(0))
        E[s] = acc / (1 - stay)
    return E[0]


# ---------------------------------------------------------------------------
# statistical surrogate

def _hist(samples, k):
    """Counts per subset mask from an (N, k) boolean array or an iterable of masks."""
    arr = np.asarray(samples)
    if arr.ndim == 2:
        arr = (arr.astype(np.int64) << np.arange(k)).sum(axis=1)
    return np.bincount(arr.astype(np.int64), minlength=2 ** k)


def empirical_dominance_test(samples1, samples2, U, threshold_sigma=3.0):
    """Monte Carlo check that side 1 dominates side 2 on every monotone family.

    ``samples2`` may be an exact :class:`OutcomeDistribution` (no sampling noise).
    The deficit of a family is ``(Pr2(F) - Pr1(F)) / se``; the report holds the
    worst one and passes when it stays within ``threshold_sigma``.
    """
    k = len(U)
    if k > MAX_UPSET_U:
        raise ExactError("too-large-exact", f"|U| = {k} > {MAX_UPSET_U}")
    h1 = _hist(samples1, k)
    n1 = int(h1.sum())
    if n1 == 0:
        raise ExactError("empty-samples", "no samples on side 1")
    if isinstance(samples2, OutcomeDistribution):
        p2vec = np.array([float(x) for x in samples2.vector()])
        n2 = math.inf
    else:
        h2 = _hist(samples2, k)
        n2 = int(h2.sum())
        if n2 == 0:
            raise ExactError("empty-samples", "no samples on side 2")
        p2vec = h2 / n2
    fams = upsets(k)
    F = np.array([[f >> m & 1 for m in range(2 ** k)] for f in fams], dtype=float)
    p1 = F @ (h1 / n1)
    p2 = F @ p2vec
    var = p1 * (1 - p1) / n1 + (0.0 if n2 == math.inf else p2 * (1 - p2) / n2)
    gap = p2 - p1
    se = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, gap / np.where(se > 0, se, 1), np.where(gap > 1e-12, np.inf, 0.0))
    i = int(np.argmax(z))
    return {
        "worst_sigma": float(z[i]),
        "worst_family": [sorted(int(U[j]) for j in range(k) if m >> j & 1) for m in family_members(fams[i], k)],
        "worst_gap": float(gap[i]),
        "families": len(fams),
        "n1": n1,
        "n2": n2 if n2 != math.inf else None,
        "passed": bool(z[i] <= threshold_sigma),
    }
