"""Tail bound for sums of independent geometric variables, with a sampling check."""

import math

import numpy as np

from .errors import ConfigError


def _check_ps(p_list):
    ps = [float(p) for p in p_list]
    if not ps:
        raise ConfigError("bad-p", "need at least one probability")
    if any(not 0 < p < 1 for p in ps):
        raise ConfigError("bad-p", "every p must lie in (0, 1)")
    if any(b < a for a, b in zip(ps, ps[1:])):
        raise ConfigError("bad-p", "probabilities must be sorted ascending (p1 smallest)")
    return ps


def chernoff_geo_bound(p_list, t):
    """Upper bound on Pr(X > 3(mu + t)) for X a sum of Geometric(p_i), mu = sum 1/p_i.

    Returns ``(bound, mu)`` with bound = exp(-(p1/2) mu - p1 t).

    >>> round(chernoff_geo_bound([0.5] * 4, 2)[0], 4)
    0.0498
    """
    ps = _check_ps(p_list)
    if t < 0:
        raise ConfigError("bad-t", "slack t must be >= 0")
    mu = sum(1 / p for p in ps)
    p1 = ps[0]
    return math.exp(-(p1 / 2) * mu - p1 * t), mu


def empirical_tail(p_list, t, samples=1_000_000, seed=0, chunk=250_000):
    """Monte Carlo Pr(X > 3(mu + t)), X = sum of independent Geometric(p_i) on {1, 2, ...}."""
    ps = _check_ps(p_list)
    mu = sum(1 / p for p in ps)
    thresh = 3 * (mu + t)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        x = np.zeros(n, dtype=np.int64)
        for p in ps:
            x += rng.geometric(p, size=n)
        hits += int(np.count_nonzero(x > thresh))
        done += n
    return hits / samples


def exact_single_tail(p, t):
    """Pr(G > 3(1/p + t)) for a single Geometric(p): (1-p)^floor(threshold)."""
    return (1 - p) ** math.floor(3 * (1 / p + t))
