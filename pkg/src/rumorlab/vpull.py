"""VPULL: T token rounds followed by one mixed PULL round.

Phase 1 never changes the informed set S. Uninformed nodes without a token request
a uniform neighbour; an informed node v with r_v <= K and X_v <= K hands a token,
with probability r_v / T', to a uniform member of R_v. Token holders stop
requesting but stay uninformed. Round T+1 asks the global oracle for BE:

* bad execution: tokens are void and every uninformed node does one PULL round;
* good execution: strongly connected nodes do one PULL round, then every token
  holder becomes informed.

Randomness is shared with RPULL through the counter RNG: request choice of ``u``
in round ``t`` is ``(t, REQUEST, u)`` and the serve pick of ``v`` is
``(t, SERVE, v)`` mapped by rank into the sorted R_v. Token coins use ``TOKEN``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import as_mask, as_rng, expand, group_requests, request_targets
from .errors import ConfigError
from .graph import Graph
from .rng import REQUEST, SERVE, TOKEN

log = logging.getLogger(__name__)

KAPPA = 2


@dataclass(frozen=True)
class VpullParams:
    T: int
    T_prime: int
    K: int
    kappa: int = KAPPA

    def __post_init__(self):
        if self.T_prime < 1 or self.T < 1 or self.K < 1:
            raise ConfigError("bad-params", "T, T' and K must be >= 1")

    @property
    def c(self) -> float:
        """c_{T,T'} = 2 kappa T / T'."""
        return 2 * self.kappa * self.T / self.T_prime

    @property
    def nonstandard(self) -> bool:
        """True when T is not comfortably larger than T'."""
        return self.T < 4 * self.T_prime

    def to_json(self):
        return {"T": self.T, "T_prime": self.T_prime, "K": self.K, "kappa": self.kappa}


def default_params(g: Graph, scale=1) -> VpullParams:
    """T' = ceil((Delta/delta) log2 n) * scale, T = 8 T', K = ceil(c (Delta/delta + log2 n)).

    >>> from rumorlab.graph import gen_basic
    >>> default_params(gen_basic("star", 9))
    VpullParams(T=208, T_prime=26, K=358, kappa=2)
    """
    if g.min_degree == 0:
        raise ConfigError("bad-params", "isolated node: Delta/delta undefined")
    ratio = g.max_degree / g.min_degree
    lg = math.log2(g.n)
    t_prime = max(1, math.ceil(ratio * lg)) * int(scale)
    T = 8 * t_prime
    c = 2 * KAPPA * T / t_prime
    K = max(1, math.ceil(c * (ratio + lg)))
    return VpullParams(T=T, T_prime=t_prime, K=K)


def strongly_connected(g: Graph, S) -> np.ndarray:
    """Mask of uninformed nodes with d_S(u)/d(u) > 1/2 (exactly 1/2 counts as weak)."""
    mask = as_mask(g, S)
    dS = g.informed_degrees(mask)
    return ~mask & (2 * dS > g.degrees)


def classify_connectivity(g: Graph, S) -> dict:
    """``{u: "strongly" | "weakly"}`` for every uninformed node."""
    mask = as_mask(g, S)
    strong = strongly_connected(g, mask)
    return {int(u): ("strongly" if strong[u] else "weakly") for u in np.flatnonzero(~mask)}


@dataclass
class VpullResult:
    informed: np.ndarray      # (B, n) S_{T+1}
    tokens: np.ndarray        # (B, n) tokenReceived
    X: np.ndarray             # (B, n) tokens sent per node
    be: np.ndarray            # (B,) global bad-execution flag
    be_nodes: np.ndarray      # (B, n) BE_v
    max_r: np.ndarray         # (B,) largest r_v seen in phase 1
    final_pull: np.ndarray    # (B, n) nodes informed by the round T+1 pull
    strong: np.ndarray        # (n,) strongly connected w.r.t. S0
    clamped: int = 0          # rounds*nodes where r_v / T' had to be clamped at 1
    history: list = field(default_factory=list)

    @property
    def token_count(self):
        return self.tokens.sum(axis=1)

    @property
    def max_X(self):
        return self.X.max(axis=1)

    def summary_rows(self, trial_ids=None):
        ids = range(len(self.be)) if trial_ids is None else trial_ids
        return [
            {"trial": int(i), "max_r": int(self.max_r[k]), "max_X": int(self.max_X[k]),
             "BE": bool(self.be[k]), "tokens": int(self.token_count[k])}
            for k, i in enumerate(ids)
        ]


def _frontier(g, mask2d):
    """Flat ids of uninformed nodes with an informed neighbour, plus d_S per trial."""
    B, n = mask2d.shape
    rows, nodes = np.nonzero(mask2d)
    src, nb = expand(g, nodes)
    dS = np.bincount(rows[src] * n + nb, minlength=B * n).reshape(B, n)
    front = np.flatnonzero((~mask2d & (dS > 0)).reshape(-1))
    return front, dS


def vpull_batch(g: Graph, S0, params: VpullParams, trial_ids, rng, record=False) -> VpullResult:
    rng = as_rng(rng)
    trial_ids = np.asarray(trial_ids, dtype=np.int64)
    B, n = len(trial_ids), g.n
    mask = as_mask(g, S0)
    if not mask.any():
        raise ConfigError("empty-start", "S0 must be nonempty")
    S = np.broadcast_to(mask, (B, n))
    S_flat = np.ascontiguousarray(S).reshape(-1)
    front, dS = _frontier(g, S)
    tokens = np.zeros(B * n, dtype=bool)
    X = np.zeros(B * n, dtype=np.int64)
    be_nodes = np.zeros(B * n, dtype=bool)
    max_r = np.zeros(B, dtype=np.int64)
    clamped = 0
    history = []
    active = front
    for t in range(1, params.T + 1):
        active = active[~tokens[active]]
        if len(active) == 0:
            break  # nothing can change in the remaining phase-1 rounds
        rows, nodes = np.divmod(active, n)
        tgt = request_targets(g, nodes, rng, t, trial_ids[rows])
        hit = S_flat[rows * n + tgt]
        r_rows, r_nodes, r_tgt = rows[hit], nodes[hit], tgt[hit]
        keys = r_rows * n + r_tgt
        order, starts, sizes = group_requests(keys, r_nodes)
        members = r_nodes[order]
        srv_flat = keys[order][starts]
        srv_rows, servers = np.divmod(srv_flat, n)
        np.maximum.at(max_r, srv_rows, sizes)
        breach = sizes > params.K
        be_nodes[srv_flat[breach]] = True
        ok = ~breach & (X[srv_flat] <= params.K)
        p = sizes / params.T_prime
        over = ok & (p > 1)
        if over.any():
            clamped += int(over.sum())
            log.debug("round %d: r_v/T' > 1 at %d servers, clamped", t, int(over.sum()))
        coin = rng.uniform(t, TOKEN, servers, trial_ids[srv_rows])
        send = ok & (coin < np.minimum(p, 1.0))
        s = rng.uniform(t, SERVE, servers, trial_ids[srv_rows])
        picks = starts + np.minimum((s * sizes).astype(np.int64), sizes - 1)
        winners = srv_rows[send] * n + members[picks[send]]
        tokens[winners] = True
        sent = srv_flat[send]
        X[sent] += 1
        be_nodes[sent[X[sent] > params.K]] = True
        if record:
            history.append({"t": t, "max_r": int(sizes.max()) if len(sizes) else 0,
                            "tokens_sent": int(send.sum()), "BE": bool(be_nodes.any())})

    be = be_nodes.reshape(B, n).any(axis=1)
    strong = strongly_connected(g, mask)
    final = S.copy()
    final_pull = np.zeros((B, n), dtype=bool)
    tok2d = tokens.reshape(B, n)
    # round T+1: who pulls
    rows, nodes = np.divmod(front, n)
    pulls = be[rows] | strong[nodes]
    rows, nodes = rows[pulls], nodes[pulls]
    tgt = request_targets(g, nodes, rng, params.T + 1, trial_ids[rows])
    win = S_flat[rows * n + tgt]
    final_pull[rows[win], nodes[win]] = True
    final |= final_pull
    final[~be] |= tok2d[~be]
    if record:
        history.append({"t": params.T + 1, "BE": bool(be.any()), "final_pull": int(final_pull.sum())})
    return VpullResult(final, tok2d, X.reshape(B, n), be, be_nodes.reshape(B, n), max_r, final_pull,
                       strong, clamped, history)


def run_vpull(g: Graph, S0, params: VpullParams, rng=None, trial=0):
    """One execution. Returns ``(S_{T+1} as sorted ids, VpullResult, BE)``."""
    res = vpull_batch(g, S0, params, [trial], rng, record=True)
    return np.flatnonzero(res.informed[0]), res, bool(res.be[0])


def run_vpull_trials(g: Graph, S0, params: VpullParams, trials, rng=None, chunk=None) -> VpullResult:
    chunk = chunk or max(1, min(4096, 2_000_000 // max(g.n, 1)))
    parts = [vpull_batch(g, S0, params, np.arange(lo, min(trials, lo + chunk)), rng)
             for lo in range(0, trials, chunk)]
    if len(parts) == 1:
        return parts[0]
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return VpullResult(cat("informed"), cat("tokens"), cat("X"), cat("be"), cat("be_nodes"),
                       cat("max_r"), cat("final_pull"), parts[0].strong,
                       sum(p.clamped for p in parts))


def estimate_informing_probability(g: Graph, S0, params: VpullParams, u, trials, rng=None):
    """Monte Carlo Pr(u in S_{T+1}) and its standard error."""
    if trials < 1:
        raise ConfigError("bad-trials", "trials must be >= 1")
    mask = as_mask(g, S0)
    if mask[u]:
        raise ConfigError("bad-node", f"node {u} is already informed")
    res = run_vpull_trials(g, mask, params, trials, rng)
    hits = res.informed[:, u]
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)
