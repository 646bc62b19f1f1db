"""Shared-randomness coupling of T rounds of random RPULL with T+1 rounds of VPULL."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .engine import ProtocolSpec, as_mask, as_rng, run_trials, simulate_batch
from .errors import ConfigError
from .graph import Graph
from .vpull import VpullParams, run_vpull_trials, vpull_batch

CAUSES = ("bad-execution", "strongly-connected", "token")


@dataclass
class CoupledRun:
    seed: int
    trial: int
    S_rpull_T: np.ndarray
    S_vpull_T1: np.ndarray
    violated: bool
    BE: bool
    cause: str | None = None
    extra_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def row(self):
        return {"seed": self.seed, "trial": self.trial, "violated": int(self.violated),
                "BE": int(self.BE), "S_rpull": len(self.S_rpull_T), "S_vpull": len(self.S_vpull_T1),
                "cause": self.cause or ""}


@dataclass
class ViolationReport:
    trials: int
    violation_count: int
    ci: tuple
    causes: dict
    be_count: int
    nonstandard_params: bool
    params: dict

    @property
    def violation_rate(self):
        return self.violation_count / self.trials

    @property
    def be_rate(self):
        return self.be_count / self.trials

    def to_json(self):
        return {"trials": self.trials, "violation_count": self.violation_count,
                "violation_rate": self.violation_rate, "ci": list(self.ci),
                "causes": dict(self.causes), "be_count": self.be_count, "be_rate": self.be_rate,
                "nonstandard_params": self.nonstandard_params, "params": self.params}


def _classify(extra, be, strong, final_pull):
    """Cause of a violation: the first applicable reason over the offending nodes."""
    if be:
        return "bad-execution"
    if np.any(strong[extra] & final_pull[extra]):
        return "strongly-connected"
    return "token"


def _coupled(g, S0, params, seed, trial_ids):
    rng = as_rng(seed)
    spec = ProtocolSpec("rpull", "random", max_rounds=params.T, seed=seed)
    rp = simulate_batch(g, S0, spec, trial_ids, rng, max_rounds=params.T)
    vp = vpull_batch(g, S0, params, trial_ids, rng)
    extra = vp.informed & ~rp.informed
    violated = extra.any(axis=1)
    return rp, vp, extra, violated


def coupled_run(g: Graph, S0, params: VpullParams, seed, trial=0) -> CoupledRun:
    """RPULL_T and VPULL_{T+1} driven by the same counter values."""
    mask = as_mask(g, S0)
    rp, vp, extra, violated = _coupled(g, mask, params, seed, np.array([trial]))
    nodes = np.flatnonzero(extra[0])
    cause = _classify(nodes, vp.be[0], vp.strong, vp.final_pull[0]) if violated[0] else None
    return CoupledRun(int(seed), int(trial), np.flatnonzero(rp.informed[0]),
                      np.flatnonzero(vp.informed[0]), bool(violated[0]), bool(vp.be[0]), cause, nodes)


def coupled_rows(g: Graph, S0, params: VpullParams, trials, seed=0, chunk=None):
    """Per-trial rows (seed, trial, violated, BE, sizes, cause), trial order."""
    mask = as_mask(g, S0)
    chunk = chunk or max(1, min(2048, 2_000_000 // max(g.n, 1)))
    rows = []
    for lo in range(0, trials, chunk):
        ids = np.arange(lo, min(trials, lo + chunk))
        rp, vp, extra, violated = _coupled(g, mask, params, seed, ids)
        for k, i in enumerate(ids):
            cause = None
            if violated[k]:
                cause = _classify(np.flatnonzero(extra[k]), vp.be[k], vp.strong, vp.final_pull[k])
            rows.append(CoupledRun(int(seed), int(i), np.flatnonzero(rp.informed[k]),
                                   np.flatnonzero(vp.informed[k]), bool(violated[k]), bool(vp.be[k]),
                                   cause, np.flatnonzero(extra[k])))
    return rows


def wilson_interval(k, n, confidence=0.95):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def estimate_violation_rate(g: Graph, S0, params: VpullParams, trials, seed=0) -> ViolationReport:
    if trials < 1:
        raise ConfigError("bad-trials", "trials must be >= 1")
    rows = coupled_rows(g, S0, params, trials, seed)
    count = sum(r.violated for r in rows)
    causes = Counter(r.cause for r in rows if r.violated)
    return ViolationReport(trials, count, wilson_interval(count, trials),
                           {c: causes.get(c, 0) for c in CAUSES}, sum(r.BE for r in rows),
                           params.nonstandard, params.to_json())


def marginal_check(g: Graph, S0, params: VpullParams, trials, seed=0):
    """Final sets of each side run alone, for comparison with the coupled run."""
    spec = ProtocolSpec("rpull", "random", max_rounds=params.T, seed=seed)
    rp = run_trials(g, S0, spec, trials, as_rng(seed), keep_sets=True, max_rounds=params.T)
    vp = run_vpull_trials(g, S0, params, trials, as_rng(seed))
    return rp.informed, vp.informed
