"""Counter-based random values.

Every value is a pure function of ``(seed, round, purpose, trial, node)``, so two
processes that look up the same counter see the same number no matter in which
order (or whether) they consume other values. This is what lets RPULL and VPULL
share request and serve choices, and lets batched trials reproduce single runs.

The mixer is the SplitMix64 finalizer applied to a Weyl-sequence counter.
"""

import numpy as np

REQUEST = 0
SERVE = 1
TOKEN = 2
PUSH = 3
FINAL = 4  # request choice of the closing VPULL round

PURPOSES = {"request": REQUEST, "serve": SERVE, "token": TOKEN, "push": PUSH, "final": FINAL}

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_int(x):
    x &= _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def mix64(x):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def _base(seed, t, purpose):
    h = _mix_int(int(seed) * _GAMMA + 0x5851F42D4C957F2D)
    h = _mix_int(h + (int(t) + 1) * _GAMMA)
    return _mix_int(h + (int(purpose) + 1) * 0xD1B54A32D192ED03)


class CounterRng:
    """Random values addressed by counters instead of drawn from a stream.

    >>> r = CounterRng(7)
    >>> float(r.uniform(3, REQUEST, [5])[0]) == float(r.uniform(3, REQUEST, [5])[0])
    True
    """

    def __init__(self, seed):
        self.seed = int(seed)
        self._cache = {}

    def _h(self, t, purpose):
        key = (t, purpose)
        h = self._cache.get(key)
        if h is None:
            if len(self._cache) > 4096:
                self._cache.clear()
            h = self._cache[key] = np.uint64(_base(self.seed, t, purpose))
        return h

    def bits(self, t, purpose, nodes, trials=0):
        nodes = np.asarray(nodes, dtype=np.uint64)
        trials = np.asarray(trials, dtype=np.uint64)
        with np.errstate(over="ignore"):
            ctr = (trials << np.uint64(32)) | nodes
            x = self._h(int(t), int(purpose)) + ctr * np.uint64(_GAMMA)
        return mix64(x)

    def uniform(self, t, purpose, nodes, trials=0):
        """Uniform doubles in [0, 1), one per (trial, node) pair (broadcast)."""
        return (self.bits(t, purpose, nodes, trials) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def choice_index(self, t, purpose, nodes, sizes, trials=0):
        """Uniform index into ``range(size)`` for each node."""
        s = self.uniform(t, purpose, nodes, trials)
        return np.minimum((s * np.asarray(sizes)).astype(np.int64), np.asarray(sizes) - 1)
