"""Round-synchronous PULL / RPULL / PUSH execution.

All protocols run on a batch of independent trials at once. State lives in flat
arrays indexed by ``b * n + v`` (trial ``b``, node ``v``). Only *frontier* nodes
(uninformed with at least one informed neighbour) ever issue a request that can
succeed, so only they are simulated; their random values come from the counter
RNG, so skipping the others changes nothing.

A single traced run (:func:`run_until_broadcast`, the ``step_*`` helpers) is the
same machinery with a batch of one.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ProtocolError
from .graph import Graph
from .rng import PUSH, REQUEST, SERVE, CounterRng

log = logging.getLogger(__name__)

PROTOCOLS = ("pull", "rpull", "push", "push_pull", "push_rpull")

# CLI-style names -> (protocol, mode)
PROTOCOL_NAMES = {
    "pull": ("pull", None),
    "rpull-random": ("rpull", "random"),
    "rpull-adversarial": ("rpull", "adversarial"),
    "push": ("push", None),
    "push-pull": ("push_pull", None),
    "push-rpull-random": ("push_rpull", "random"),
    "push-rpull-adversarial": ("push_rpull", "adversarial"),
}


# ---------------------------------------------------------------------------
# adversaries

class AdversaryStrategy:
    """Chooses which requester an informed node serves under adversarial RPULL.

    Subclasses override :meth:`choose`; :meth:`choose_groups` is the batched
    entry point used by the engine and may be overridden for speed.
    """

    name = "custom"

    def choose(self, server, requesters, informed, t, graph):
        """Return one id from ``requesters`` (sorted ascending).

        ``informed`` is the boolean membership vector of S at round start.
        """
        raise NotImplementedError

    def choose_groups(self, servers, starts, sizes, requesters, informed2d, rows, t, graph):
        """Positions into ``requesters`` of the served node of every group."""
        picks = np.empty(len(servers), dtype=np.int64)
        for i, (v, s, k, b) in enumerate(zip(servers, starts, sizes, rows)):
            group = requesters[s:s + k]
            u = self.choose(int(v), group, informed2d[b], t, graph)
            hit = np.flatnonzero(group == u)
            if len(hit) != 1:
                raise ProtocolError("illegal-adversary-choice",
                                    f"node {u} did not request {v} in round {t}")
            picks[i] = s + hit[0]
        return picks

    def to_json(self):
        return {"name": self.name}


class LowestIdAdversary(AdversaryStrategy):
    name = "lowest-id"

    def choose(self, server, requesters, informed, t, graph):
        return int(requesters[0])

    def choose_groups(self, servers, starts, sizes, requesters, informed2d, rows, t, graph):
        return np.asarray(starts, dtype=np.int64)


class AvoidingAdversary(AdversaryStrategy):
    """At each node in ``servers`` never serve ``avoid[server]`` unless it is the only requester.

    Everywhere else the lowest id wins.
    """

    name = "avoiding"

    def __init__(self, avoid: dict):
        self.avoid = {int(k): int(v) for k, v in avoid.items()}
        keys = np.array(sorted(self.avoid), dtype=np.int64)
        self._keys = keys
        self._vals = np.array([self.avoid[k] for k in keys.tolist()], dtype=np.int64)

    def choose(self, server, requesters, informed, t, graph):
        bad = self.avoid.get(int(server))
        for u in requesters:
            if u != bad:
                return int(u)
        return int(requesters[0])

    def choose_groups(self, servers, starts, sizes, requesters, informed2d, rows, t, graph):
        picks = np.asarray(starts, dtype=np.int64).copy()
        if len(self._keys) == 0:
            return picks
        i = np.minimum(np.searchsorted(self._keys, servers), len(self._keys) - 1)
        special = self._keys[i] == servers
        # requesters are sorted inside a group, so only the first slot can hold the avoided node
        skip = special & (requesters[picks] == self._vals[i]) & (np.asarray(sizes) >= 2)
        picks[skip] += 1
        return picks

    def to_json(self):
        return {"name": self.name, "avoid": {str(k): v for k, v in self.avoid.items()}}


def stalling_adversary(layout) -> AvoidingAdversary:
    """Adversary that keeps r from passing the rumor to r_zeta (in every copy)."""
    adv = AvoidingAdversary({c.r: c.r_zeta for c in layout.copies()})
    adv.name = "stalling"
    return adv


ADVERSARIES = {"lowest-id": LowestIdAdversary}


# ---------------------------------------------------------------------------
# spec and traces

@dataclass
class ProtocolSpec:
    protocol: str = "pull"
    mode: str | None = None
    adversary: AdversaryStrategy | None = None
    max_rounds: int = 10_000
    seed: int = 0
    push_accept_limit: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError("bad-protocol", f"unknown protocol {self.protocol!r}")
        restricted = self.protocol in ("rpull", "push_rpull")
        if restricted and self.mode is None:
            self.mode = "random"
        if restricted and self.mode not in ("random", "adversarial"):
            raise ConfigError("bad-mode", f"mode must be random or adversarial, got {self.mode!r}")
        if not restricted:
            self.mode = None
        if self.mode == "adversarial" and self.adversary is None:
            raise ConfigError("missing-adversary", "adversarial mode needs an adversary")
        if int(self.max_rounds) < 1:
            raise ConfigError("bad-rounds", "max_rounds must be >= 1")

    @classmethod
    def from_name(cls, name, **kw):
        if name not in PROTOCOL_NAMES:
            raise ConfigError("bad-protocol", f"unknown protocol {name!r}; known: {sorted(PROTOCOL_NAMES)}")
        protocol, mode = PROTOCOL_NAMES[name]
        if mode == "adversarial" and kw.get("adversary") is None:
            kw["adversary"] = LowestIdAdversary()
        return cls(protocol=protocol, mode=mode, **kw)

    @property
    def does_pull(self):
        return self.protocol in ("pull", "rpull", "push_pull", "push_rpull")

    @property
    def restricted(self):
        return self.protocol in ("rpull", "push_rpull")

    @property
    def does_push(self):
        return self.protocol.startswith("push")

    def to_json(self):
        return {
            "protocol": self.protocol,
            "mode": self.mode,
            "adversary": self.adversary.to_json() if self.adversary else None,
            "max_rounds": int(self.max_rounds),
            "seed": int(self.seed),
        }


@dataclass
class RoundTrace:
    t: int
    newly_informed: np.ndarray
    requests: dict = field(default_factory=dict)  # informed server -> sorted requesters
    served: dict = field(default_factory=dict)    # server -> node it accepted (RPULL only)
    pushed: dict = field(default_factory=dict)    # pusher -> target
    causes: dict = field(default_factory=dict)    # newly informed node -> {"pull", "push"}

    @property
    def r(self):
        """r_v for every informed node that received at least one request."""
        return {v: len(rs) for v, rs in self.requests.items()}

    @property
    def new_count(self):
        return len(self.newly_informed)


@dataclass
class BatchResult:
    times: np.ndarray        # broadcast round per trial, -1 on timeout
    informed: np.ndarray     # (trials, n) final membership
    unreachable: np.ndarray  # trial stopped because no progress was possible
    rounds: int              # rounds simulated

    @property
    def timeouts(self):
        return int(np.sum(self.times < 0))


# ---------------------------------------------------------------------------
# core

def as_mask(g: Graph, S) -> np.ndarray:
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape != (g.n,):
            raise ConfigError("bad-set", "mask length must equal n")
        return S.copy()
    mask = np.zeros(g.n, dtype=bool)
    if S.size:
        if S.min() < 0 or S.max() >= g.n:
            raise ConfigError("bad-set", "node id out of range")
        mask[S.astype(np.int64)] = True
    return mask


def as_rng(rng) -> CounterRng:
    return rng if isinstance(rng, CounterRng) else CounterRng(0 if rng is None else rng)


def expand(g: Graph, nodes: np.ndarray):
    """CSR neighbour expansion: (position of source in ``nodes``, neighbour) pairs."""
    lens = g.degrees[nodes]
    total = int(lens.sum())
    src = np.repeat(np.arange(len(nodes)), lens)
    if total == 0:
        return src, np.empty(0, dtype=np.int64)
    ends = np.cumsum(lens)
    offs = np.arange(total) - np.repeat(ends - lens, lens)
    return src, g.indices[g.indptr[nodes][src] + offs]


def request_targets(g: Graph, nodes, rng: CounterRng, t, trials=0, purpose=REQUEST) -> np.ndarray:
    """Uniform neighbour chosen by each requesting node (``-1`` for isolated nodes)."""
    nodes = np.asarray(nodes, dtype=np.int64)
    deg = g.degrees[nodes]
    s = rng.uniform(t, purpose, nodes, trials)
    if len(g.indices) == 0:
        return np.full(len(nodes), -1, dtype=np.int64)
    k = np.minimum((s * deg).astype(np.int64), np.maximum(deg - 1, 0))
    idx = np.minimum(g.indptr[nodes] + k, len(g.indices) - 1)
    return np.where(deg > 0, g.indices[idx], -1)


def group_requests(keys, members):
    """Sort (key, member) pairs and return order, group starts, group sizes."""
    order = np.lexsort((members, keys))
    ks = keys[order]
    if len(ks) == 0:
        return order, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, ks[1:] != ks[:-1]])
    sizes = np.diff(np.r_[starts, len(ks)])
    return order, starts, sizes


class _Batch:
    """Mutable state of ``B`` trials over one graph."""

    def __init__(self, g: Graph, S0_masks: np.ndarray, trial_ids: np.ndarray, targets=None):
        self.g = g
        self.n = g.n
        self.B = len(trial_ids)
        self.trial_ids = np.asarray(trial_ids, dtype=np.int64)
        n, B = self.n, self.B
        self.informed = np.ascontiguousarray(S0_masks, dtype=bool).reshape(B * n).copy()
        self.dS = np.zeros(B * n, dtype=np.int32)
        self.in_frontier = np.zeros(B * n, dtype=bool)
        self.frontier = np.empty(0, dtype=np.int64)
        self.deg_flat = None
        self.serve_hook = None
        if targets is None:
            self.target_mask = None
            self.target_total = n
            self.tcount = self.informed.reshape(B, n).sum(axis=1)
        else:
            self.target_mask = np.zeros(n, dtype=bool)
            self.target_mask[np.asarray(targets, dtype=np.int64)] = True
            self.target_total = int(self.target_mask.sum())
            self.tcount = (self.informed.reshape(B, n) & self.target_mask).sum(axis=1)
        self.done = self.tcount >= self.target_total
        self._spread(np.flatnonzero(self.informed))

    def view(self):
        return self.informed.reshape(self.B, self.n)

    def _spread(self, new_flat):
        """Account for newly informed flat ids: bump d_S of neighbours, extend frontier."""
        if len(new_flat) == 0:
            return
        n = self.n
        rows, nodes = np.divmod(new_flat, n)
        src, nb = expand(self.g, nodes)
        nb_flat = rows[src] * n + nb
        if len(nb_flat) > len(self.dS) // 8:
            self.dS += np.bincount(nb_flat, minlength=len(self.dS)).astype(np.int32)
        else:
            np.add.at(self.dS, nb_flat, 1)
        cand = nb_flat[~self.informed[nb_flat] & ~self.in_frontier[nb_flat]]
        if len(cand):
            cand = np.unique(cand)
            self.in_frontier[cand] = True
            self.frontier = np.concatenate([self.frontier, cand])

    def inform(self, new_flat):
        new_flat = np.unique(new_flat)
        new_flat = new_flat[~self.informed[new_flat]]
        self.informed[new_flat] = True
        rows, nodes = np.divmod(new_flat, self.n)
        if self.target_mask is not None:
            keep = self.target_mask[nodes]
            rows_t = rows[keep]
        else:
            rows_t = rows
        self.tcount += np.bincount(rows_t, minlength=self.B)
        self._spread(new_flat)
        return new_flat

    def prune(self):
        """Drop informed nodes and finished trials from the frontier."""
        f = self.frontier
        keep = ~self.informed[f]
        if self.done.any():
            keep &= ~self.done[f // self.n]
        self.frontier = f[keep]


def _pull_part(batch: _Batch, spec: ProtocolSpec, rng: CounterRng, t, record):
    g, n = batch.g, batch.n
    f = batch.frontier
    rows, nodes = np.divmod(f, n)
    tgt = request_targets(g, nodes, rng, t, batch.trial_ids[rows])
    hit = batch.informed[rows * n + tgt]
    req_rows, req_nodes, req_tgt = rows[hit], nodes[hit], tgt[hit]
    info = {}
    if record:
        _, starts, sizes = group_requests(req_tgt, req_nodes)
        order = np.lexsort((req_nodes, req_tgt))
        info["requests"] = {int(req_tgt[order][s]): req_nodes[order][s:s + k].copy()
                            for s, k in zip(starts, sizes)}
    if not spec.restricted:
        return req_rows * n + req_nodes, info
    keys = req_rows * n + req_tgt
    order, starts, sizes = group_requests(keys, req_nodes)
    members = req_nodes[order]
    servers = req_tgt[order][starts]
    srv_rows = req_rows[order][starts]
    if spec.mode == "random":
        s = rng.uniform(t, SERVE, servers, batch.trial_ids[srv_rows])
        picks = starts + np.minimum((s * sizes).astype(np.int64), sizes - 1)
    else:
        picks = spec.adversary.choose_groups(servers, starts, sizes, members, batch.view(),
                                             srv_rows, t, g)
        picks = np.asarray(picks, dtype=np.int64)
        if np.any((picks < starts) | (picks >= starts + sizes)):
            raise ProtocolError("illegal-adversary-choice", f"pick outside R_v in round {t}")
    if batch.serve_hook is not None:
        batch.serve_hook(t, srv_rows, servers, starts, sizes, members, picks)
    if record:
        info["served"] = {int(v): int(members[p]) for v, p in zip(servers, picks)}
    return srv_rows * n + members[picks], info


def _push_part(batch: _Batch, spec: ProtocolSpec, rng: CounterRng, t, record):
    g, n = batch.g, batch.n
    if batch.deg_flat is None:
        batch.deg_flat = np.tile(g.degrees.astype(np.int32), batch.B)
    live = batch.informed & (batch.dS < batch.deg_flat)
    if batch.done.any():
        live &= ~np.repeat(batch.done, n)
    pf = np.flatnonzero(live)
    rows, nodes = np.divmod(pf, n)
    tgt = request_targets(g, nodes, rng, t, batch.trial_ids[rows], purpose=PUSH)
    ok = ~batch.informed[rows * n + tgt]
    out_rows, out_src, out_tgt = rows[ok], nodes[ok], tgt[ok]
    if spec.push_accept_limit and len(out_tgt):
        # each target accepts only the lowest-id pusher; same newly informed set
        _, starts, _ = group_requests(out_rows * n + out_tgt, out_src)
        order = np.lexsort((out_src, out_rows * n + out_tgt))
        out_rows, out_src, out_tgt = out_rows[order][starts], out_src[order][starts], out_tgt[order][starts]
    info = {}
    if record:
        info["pushed"] = {int(v): int(w) for v, w in zip(nodes, tgt)}
    return out_rows * n + out_tgt, info


def _round(batch: _Batch, spec: ProtocolSpec, rng: CounterRng, t, record=False):
    """One synchronous round; returns (new flat ids, trace info)."""
    parts, info = [], {}
    pulled = pushed = np.empty(0, dtype=np.int64)
    if spec.does_pull:
        pulled, i1 = _pull_part(batch, spec, rng, t, record)
        info.update(i1)
        parts.append(pulled)
    if spec.does_push:
        pushed, i2 = _push_part(batch, spec, rng, t, record)
        info.update(i2)
        parts.append(pushed)
    new = batch.inform(np.concatenate(parts) if parts else np.empty(0, dtype=np.int64))
    if record:
        causes = {}
        for tag, arr in (("pull", pulled), ("push", pushed)):
            for v in (arr % batch.n).tolist():
                causes.setdefault(v, set()).add(tag)
        info["causes"] = causes
    return new, info


def simulate_batch(g: Graph, S0, spec: ProtocolSpec, trial_ids, rng=None, max_rounds=None,
                   targets=None, on_round=None, serve_hook=None) -> BatchResult:
    """Run trials ``trial_ids`` of ``spec`` from the same start set.

    ``targets`` restricts the stopping rule to a node subset (default: all of V).
    ``on_round(t, informed2d, batch)`` is called after every round and
    ``serve_hook(t, rows, servers, starts, sizes, requesters, picks)`` after every
    restricted serve decision (batch row indices, not trial ids).
    """
    rng = as_rng(spec.seed if rng is None else rng)
    max_rounds = int(spec.max_rounds if max_rounds is None else max_rounds)
    trial_ids = np.asarray(trial_ids, dtype=np.int64)
    B = len(trial_ids)
    mask = as_mask(g, S0)
    if not mask.any():
        raise ConfigError("empty-start", "S0 must be nonempty")
    batch = _Batch(g, np.broadcast_to(mask, (B, g.n)), trial_ids, targets)
    batch.serve_hook = serve_hook
    times = np.where(batch.done, 0, -1).astype(np.int64)
    unreachable = np.zeros(B, dtype=bool)
    t = 0
    while t < max_rounds and not batch.done.all():
        t += 1
        _round(batch, spec, rng, t)
        fin = (batch.tcount >= batch.target_total) & ~batch.done
        times[fin] = t
        batch.done |= fin
        batch.prune()
        live = np.bincount(batch.frontier // g.n, minlength=B) > 0
        stuck = ~batch.done & ~live
        if stuck.any():
            unreachable |= stuck
            batch.done |= stuck
        if on_round is not None:
            on_round(t, batch.view(), batch)
    return BatchResult(times, batch.view().copy(), unreachable, t)


def default_chunk(n):
    return max(1, min(4096, 4_000_000 // max(n, 1)))


def workers_from_env():
    """Worker cap from RUMORLAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("RUMORLAB_THREADS", "1")))
    except ValueError:
        raise ConfigError("bad-threads", "RUMORLAB_THREADS must be an integer") from None


def run_trials(g: Graph, S0, spec: ProtocolSpec, trials, rng=None, chunk=None, keep_sets=False,
               workers=None, **kw) -> BatchResult:
    """Trials ``0..trials-1`` in memory-bounded chunks.

    Results depend neither on ``chunk`` nor on ``workers``: every trial draws
    from its own counters and chunks are reassembled in trial order.
    """
    if trials < 1:
        raise ConfigError("bad-trials", "trials must be >= 1")
    chunk = chunk or default_chunk(g.n)
    workers = workers or workers_from_env()
    ranges = [np.arange(lo, min(trials, lo + chunk)) for lo in range(0, trials, chunk)]
    job = lambda ids: simulate_batch(g, S0, spec, ids, rng, **kw)
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, ranges))
    else:
        results = [job(ids) for ids in ranges]
    times, sets, unreach, rounds = [], [], [], 0
    for res in results:
        times.append(res.times)
        unreach.append(res.unreachable)
        if keep_sets:
            sets.append(res.informed)
        rounds = max(rounds, res.rounds)
    informed = np.concatenate(sets) if keep_sets else np.empty((0, g.n), dtype=bool)
    return BatchResult(np.concatenate(times), informed, np.concatenate(unreach), rounds)


def run_until_broadcast(g: Graph, S0, spec: ProtocolSpec, rng=None, max_rounds=None, trial=0,
                        record=True):
    """Single traced run.

    Returns ``(broadcast_time, traces)``; ``broadcast_time`` is ``None`` on timeout.
    When the run stops because the remaining nodes cannot be reached, a warning
    is logged and ``None`` is returned as well.
    """
    rng = as_rng(spec.seed if rng is None else rng)
    max_rounds = int(spec.max_rounds if max_rounds is None else max_rounds)
    mask = as_mask(g, S0)
    if not mask.any():
        raise ConfigError("empty-start", "S0 must be nonempty")
    batch = _Batch(g, mask[None, :], np.array([trial]))
    traces = []
    if batch.done[0]:
        return 0, traces
    for t in range(1, max_rounds + 1):
        new, info = _round(batch, spec, rng, t, record=record)
        if record:
            traces.append(RoundTrace(t, np.sort(new), info.get("requests", {}), info.get("served", {}),
                                     info.get("pushed", {}), info.get("causes", {})))
        else:
            traces.append(len(new))
        if batch.tcount[0] >= batch.target_total:
            return t, traces
        batch.prune()
        if len(batch.frontier) == 0:
            log.warning("no uninformed node is reachable from S; stopping after round %d", t)
            return None, traces
    return None, traces


def _step(g, S, spec, rng, t, trial=0) -> RoundTrace:
    mask = as_mask(g, S)
    rng = as_rng(rng)
    batch = _Batch(g, mask[None, :], np.array([trial]))
    new, info = _round(batch, spec, rng, t, record=True)
    return RoundTrace(t, np.sort(new), info.get("requests", {}), info.get("served", {}),
                      info.get("pushed", {}), info.get("causes", {}))


def step_pull(g, S, rng, t, trial=0) -> RoundTrace:
    return _step(g, S, ProtocolSpec("pull"), rng, t, trial)


def step_rpull(g, S, rng, t, mode="random", adv=None, trial=0) -> RoundTrace:
    if mode == "adversarial" and adv is None:
        raise ConfigError("missing-adversary", "adversarial mode needs an adversary")
    return _step(g, S, ProtocolSpec("rpull", mode, adv), rng, t, trial)


def step_push(g, S, rng, t, trial=0, accept_limit=False) -> RoundTrace:
    return _step(g, S, ProtocolSpec("push", push_accept_limit=accept_limit), rng, t, trial)


def step_combined(g, S, rng, t, combo="push_pull", mode=None, adv=None, trial=0) -> RoundTrace:
    if combo not in ("push_pull", "push_rpull"):
        raise ConfigError("bad-protocol", f"unknown combination {combo!r}")
    return _step(g, S, ProtocolSpec(combo, mode, adv), rng, t, trial)


def request_vector(g: Graph, S, rng, t, trial=0) -> dict:
    """Target of every uninformed node in round ``t`` (informed nodes do not request)."""
    mask = as_mask(g, S)
    u = np.flatnonzero(~mask)
    tgt = request_targets(g, u, as_rng(rng), t, trial)
    return {int(a): (int(b) if b >= 0 else None) for a, b in zip(u, tgt)}
