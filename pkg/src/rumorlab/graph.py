"""Undirected simple graphs in CSR form, topology generators and validators.

Node ids are always ``0..n-1`` and neighbour lists are sorted, so iteration
order (and therefore every seeded simulation) is deterministic.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphError

MAX_NODES = 5_000_000
MAX_EDGES = 50_000_000


class Graph:
    """Immutable undirected simple graph.

    Parameters
    ----------
    n : int
        Number of nodes.
    indptr, indices : numpy.ndarray
        CSR adjacency; ``indices[indptr[v]:indptr[v+1]]`` are the sorted
        neighbours of ``v``. Use :meth:`from_edges` unless the arrays are
        already known to be valid.
    labels : sequence of str, optional
        Role tag per node (``"root"``, ``"leaf"``, ...).
    """

    def __init__(self, n, indptr, indices, labels=None):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.degrees = np.diff(self.indptr)
        self.labels = tuple(labels) if labels is not None else None
        for arr in (self.indptr, self.indices, self.degrees):
            arr.flags.writeable = False

    @classmethod
    def from_edges(cls, n, edges, labels=None) -> Graph:
        n = int(n)
        if n < 1:
            raise GraphError("bad-size", "a graph needs at least one node")
        if n > MAX_NODES:
            raise GraphError("too-large", f"{n} nodes exceeds {MAX_NODES}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e) > MAX_EDGES:
            raise GraphError("too-large", f"{len(e)} edges exceeds {MAX_EDGES}")
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise GraphError("bad-edge", "endpoint outside 0..n-1")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("bad-edge", "self-loop")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        if len(np.unique(lo * n + hi)) != len(e):
            raise GraphError("bad-edge", "duplicate edge")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        if labels is not None and len(labels) != n:
            raise GraphError("bad-labels", "one label per node required")
        return cls(n, indptr, dst[order], labels)

    def neighbors(self, v) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v) -> int:
        return int(self.degrees[v])

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min())

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def degree_ratio(self) -> float:
        """Delta / delta; infinite when some node is isolated."""
        return math.inf if self.min_degree == 0 else self.max_degree / self.min_degree

    def has_edge(self, u, v) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def informed_degrees(self, informed) -> np.ndarray:
        """d_S(u) for every node, where ``informed`` is a boolean mask of S."""
        mask = np.asarray(informed, dtype=bool)
        counts = np.zeros(len(self.indices) + 1, dtype=np.int64)
        np.cumsum(mask[self.indices], out=counts[1:])
        return counts[self.indptr[1:]] - counts[self.indptr[:-1]]

    def degree_in(self, u, informed) -> int:
        mask = np.asarray(informed, dtype=bool)
        return int(mask[self.neighbors(u)].sum())

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def label_nodes(self, label) -> np.ndarray:
        if self.labels is None:
            return np.empty(0, dtype=np.int64)
        return np.array([v for v, lab in enumerate(self.labels) if lab == label], dtype=np.int64)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"


# ---------------------------------------------------------------------------
# layouts

@dataclass
class LctLayout:
    """Ids of a k-leaf-connected tree: complete binary tree whose leaves form a clique.

    Nodes are stored in heap order from ``offset``: node ``offset + i`` has
    children ``offset + 2i + 1`` and ``offset + 2i + 2``.
    """
    k: int
    offset: int = 0

    @property
    def size(self) -> int:
        return 2 * self.k - 1

    @property
    def root(self) -> int:
        return self.offset

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.size)

    @property
    def branch_nodes(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.k - 1)

    @property
    def leaf_nodes(self) -> np.ndarray:
        return np.arange(self.offset + self.k - 1, self.offset + self.size)

    def layer(self, depth) -> np.ndarray:
        """Branch-tree nodes at ``depth``, left to right."""
        lo = 2 ** depth - 1
        return np.arange(self.offset + lo, self.offset + min(2 * lo + 1, self.size))

    def parent(self, v) -> int:
        i = v - self.offset
        return self.offset + (i - 1) // 2

    def tree_edges(self) -> np.ndarray:
        child = np.arange(1, self.size)
        return np.column_stack([(child - 1) // 2, child]) + self.offset

    def clique_edges(self) -> np.ndarray:
        a, b = np.triu_indices(self.k, 1)
        base = self.offset + self.k - 1
        return np.column_stack([a + base, b + base])

    def edges(self) -> np.ndarray:
        return np.concatenate([self.tree_edges(), self.clique_edges()])


@dataclass
class SeparationLayout:
    l: int
    c: int
    m: int
    n_big: int
    log_n: int
    r: int
    alpha: LctLayout
    zeta: LctLayout
    blocks: list  # LctLayout per D_i
    c_alpha: np.ndarray
    offset: int = 0
    size: int = 0
    twin: SeparationLayout | None = None
    bridge: tuple | None = None

    @property
    def r_alpha(self) -> int:
        return self.alpha.root

    @property
    def r_zeta(self) -> int:
        return self.zeta.root

    @property
    def roots(self) -> np.ndarray:
        return np.array([d.root for d in self.blocks], dtype=np.int64)

    @property
    def leaves_alpha(self) -> np.ndarray:
        return self.alpha.leaf_nodes

    @property
    def leaves_zeta(self) -> np.ndarray:
        return self.zeta.leaf_nodes

    def leaves(self, i) -> np.ndarray:
        """Leaf set L_i of D_i (0-based i)."""
        return self.blocks[i].leaf_nodes

    def r_leaves(self) -> np.ndarray:
        """Leaves of the D_i joined to r."""
        return np.concatenate([d.leaf_nodes[:self.log_n] for d in self.blocks])

    def block_index(self, n_total) -> np.ndarray:
        """Per node: -1 outside this copy, -2 for r, 0 for D_alpha, 1..m for D_i, m+1 for D_zeta."""
        out = np.full(n_total, -1, dtype=np.int64)
        out[self.r] = -2
        out[self.alpha.nodes] = 0
        for i, d in enumerate(self.blocks, start=1):
            out[d.nodes] = i
        out[self.zeta.nodes] = self.m + 1
        return out

    def role_nodes(self) -> dict:
        """Representative node of each role class, for source sweeps."""
        d1 = self.blocks[0]
        return {
            "r": self.r,
            "r_alpha": self.r_alpha,
            "r_zeta": self.r_zeta,
            "r_i": d1.root,
            "l_alpha": int(self.leaves_alpha[0]),
            "l_zeta": int(self.leaves_zeta[0]),
            "l_i": int(d1.leaf_nodes[0]),
            "c_i": int(self.c_alpha[0]),
        }

    def copies(self) -> list:
        return [self] if self.twin is None else [self, self.twin]


@dataclass
class TightnessLayout:
    k: int
    A: np.ndarray
    B: np.ndarray
    cliques: np.ndarray  # shape (k^2, k^2, k): T_{i,j}
    bridges: np.ndarray = field(init=False)  # shape (k^2, k^2): t_{i,j}

    def __post_init__(self):
        self.bridges = self.cliques[:, :, 0]


# ---------------------------------------------------------------------------
# generators

BASIC_KINDS = ("path", "star", "complete", "clique", "complete_binary_tree")


def _check_size(n, m=0):
    if n > MAX_NODES or m > MAX_EDGES:
        raise GraphError("too-large", f"{n} nodes / {m} edges exceeds the generator cap")


def gen_basic(kind, size_param) -> Graph:
    """Path, star, complete graph (alias ``clique``) or complete binary tree.

    ``size_param`` is the node count, except for ``complete_binary_tree``
    where it is the depth (``2**(depth+1) - 1`` nodes, heap order, root 0).
    """
    size_param = int(size_param)
    if kind == "complete_binary_tree":
        if size_param < 0:
            raise GraphError("bad-size", "depth must be >= 0")
        if size_param > 40:
            raise GraphError("too-large", f"depth {size_param}")
        n = 2 ** (size_param + 1) - 1
        _check_size(n)
        child = np.arange(1, n)
        return Graph.from_edges(n, np.column_stack([(child - 1) // 2, child]))
    if size_param < 1:
        raise GraphError("bad-size", "size_param must be >= 1")
    n = size_param
    if kind == "path":
        _check_size(n, n - 1)
        v = np.arange(n - 1)
        return Graph.from_edges(n, np.column_stack([v, v + 1]))
    if kind == "star":
        _check_size(n, n - 1)
        leaves = np.arange(1, n)
        labels = ["center"] + ["leaf"] * (n - 1)
        return Graph.from_edges(n, np.column_stack([np.zeros_like(leaves), leaves]), labels)
    if kind in ("complete", "clique"):
        _check_size(n, n * (n - 1) // 2)
        a, b = np.triu_indices(n, 1)
        return Graph.from_edges(n, np.column_stack([a, b]))
    raise GraphError("bad-kind", f"unknown kind {kind!r}; expected one of {BASIC_KINDS}")


def _is_pow2(x) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def gen_lct(k) -> tuple[Graph, LctLayout]:
    k = int(k)
    if k < 2 or not _is_pow2(k):
        raise GraphError("lct-shape", f"k={k} must be a power of two >= 2")
    _check_size(2 * k - 1, k * (k - 1) // 2 + 2 * (k - 1))
    layout = LctLayout(k)
    labels = ["root"] + ["branch"] * (k - 2) + ["leaf"] * k
    return Graph.from_edges(layout.size, layout.edges(), labels), layout


def _separation_copy(l, c, offset):
    n_big = l * l
    log_n = math.ceil(math.log2(n_big))
    m = c * l
    r = offset
    alpha = LctLayout(n_big, offset + 1)
    blocks = []
    pos = alpha.offset + alpha.size
    for _ in range(m):
        blocks.append(LctLayout(l, pos))
        pos += blocks[-1].size
    zeta = LctLayout(n_big, pos)
    pos += zeta.size
    depth = math.ceil(math.log2(m)) if m > 1 else 0
    c_alpha = alpha.layer(depth)[:m]

    edges = [alpha.edges(), zeta.edges()] + [d.edges() for d in blocks]
    edges.append(np.array([[r, zeta.root]]))
    la = alpha.leaf_nodes[:m * log_n]
    edges.append(np.column_stack([np.full(len(la), r), la]))
    for i, d in enumerate(blocks):
        li = d.leaf_nodes
        edges.append(np.column_stack([np.full(log_n, r), li[:log_n]]))
        edges.append(np.array([[d.root, zeta.leaf_nodes[i]]]))
        edges.append(np.array([[li[-1], c_alpha[i]]]))
    layout = SeparationLayout(l=l, c=c, m=m, n_big=n_big, log_n=log_n, r=r, alpha=alpha,
                              zeta=zeta, blocks=blocks, c_alpha=c_alpha, offset=offset,
                              size=pos - offset)
    labels = ["leaf"] * layout.size
    labels[0] = "r"
    for d, tag in [(alpha, "alpha"), (zeta, "zeta")] + [(b, "block") for b in blocks]:
        for v in d.branch_nodes:
            labels[v - offset] = f"{tag}-branch"
        for v in d.leaf_nodes:
            labels[v - offset] = f"{tag}-leaf"
    labels[alpha.root - offset] = "r_alpha"
    labels[zeta.root - offset] = "r_zeta"
    for d in blocks:
        labels[d.root - offset] = "r_i"
    for v in c_alpha:
        labels[v - offset] = "c_i"
    return layout, np.concatenate(edges), labels


def separation_constraints(l, c) -> list[str]:
    """Human-readable list of violated preconditions (empty when feasible)."""
    bad = []
    if l < 2 or not _is_pow2(l):
        bad.append(f"l={l} must be a power of two >= 2")
        return bad
    if c < 1:
        bad.append(f"c={c} must be >= 1")
        return bad
    n_big = l * l
    log_n = math.ceil(math.log2(n_big))
    m = c * l
    if m * log_n > n_big:
        bad.append(f"m*log n = {m * log_n} exceeds |L_alpha| = {n_big}")
    if log_n >= l:
        bad.append(f"log n = {log_n} must be < l = {l} (disjoint leaves in D_i)")
    if m > n_big:
        bad.append(f"m = {m} exceeds |L_zeta| = {n_big}")
    depth = math.ceil(math.log2(m)) if m > 1 else 0
    if depth >= int(math.log2(n_big)):
        bad.append(f"C_alpha layer depth {depth} is not a branch layer of D_alpha")
    return bad


def gen_separation(l, c=1, doubled=False) -> tuple[Graph, SeparationLayout]:
    """Graph separating adversarial from random restricted pull.

    Two LCT(l^2) blocks D_alpha, D_zeta, ``m = c*l`` LCT(l) blocks D_i and a hub r.
    With ``doubled`` two copies are joined by an edge between their r_alpha.
    """
    l, c = int(l), int(c)
    bad = separation_constraints(l, c)
    if bad:
        raise GraphError("separation-shape", "; ".join(bad))
    layout, edges, labels = _separation_copy(l, c, 0)
    n = layout.size
    if doubled:
        twin, edges2, labels2 = _separation_copy(l, c, n)
        layout.twin = twin
        layout.bridge = (layout.r_alpha, twin.r_alpha)
        edges = np.concatenate([edges, edges2, [layout.bridge]])
        labels = labels + labels2
        n *= 2
    _check_size(n, len(edges))
    return Graph.from_edges(n, edges, labels), layout


def gen_tightness(k) -> tuple[Graph, TightnessLayout]:
    """Complete bipartite A-B plus k^4 k-cliques; b_i has one bridge into each T_{i,j}."""
    k = int(k)
    if k < 2:
        raise GraphError("tightness-shape", f"k={k} must be >= 2")
    k2 = k * k
    n = 2 * k2 + k2 * k2 * k
    _check_size(n, k2 * k2 + k2 * k2 + k2 * k2 * k * (k - 1) // 2)
    A = np.arange(k2)
    B = np.arange(k2, 2 * k2)
    cliques = (2 * k2 + np.arange(k2 * k2 * k)).reshape(k2, k2, k)
    ai, bi = np.meshgrid(A, B, indexing="ij")
    parts = [np.column_stack([ai.ravel(), bi.ravel()])]
    parts.append(np.column_stack([np.repeat(B, k2), cliques[:, :, 0].ravel()]))
    x, y = np.triu_indices(k, 1)
    flat = cliques.reshape(-1, k)
    parts.append(np.column_stack([flat[:, x].ravel(), flat[:, y].ravel()]))
    labels = ["A"] * k2 + ["B"] * k2 + (["bridge"] + ["clique"] * (k - 1)) * (k2 * k2)
    layout = TightnessLayout(k, A, B, cliques)
    return Graph.from_edges(n, np.concatenate(parts), labels), layout


# ---------------------------------------------------------------------------
# paths and trees

def _check_path(g, p):
    p = [int(v) for v in p]
    if not p:
        raise GraphError("not-a-path", "empty path")
    if len(set(p)) != len(p):
        raise GraphError("not-a-path", "repeated node")
    for v in p:
        if not 0 <= v < g.n:
            raise GraphError("not-a-path", f"node {v} not in graph")
    for a, b in zip(p, p[1:]):
        if not g.has_edge(a, b):
            raise GraphError("not-a-path", f"{a} and {b} are not adjacent")
    return p


def path_degree_sum(g: Graph, p: Sequence[int]) -> int:
    """D_p: the sum of degrees over the nodes of path ``p``."""
    return int(sum(g.degrees[v] for v in _check_path(g, p)))


def path_max_degree(g: Graph, p: Sequence[int]) -> int:
    return int(max(g.degrees[v] for v in _check_path(g, p)))


def _bfs_parents(g, root):
    parent = np.full(g.n, -2, dtype=np.int64)
    parent[root] = -1
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if parent[w] == -2:
                parent[w] = v
                order.append(int(w))
                queue.append(int(w))
    return parent, order


def is_connected(g: Graph) -> bool:
    return len(_bfs_parents(g, 0)[1]) == g.n


def reachable(g: Graph, sources) -> np.ndarray:
    """Boolean mask of nodes connected to any node of ``sources``."""
    seen = np.zeros(g.n, dtype=bool)
    for s in sources:
        if not seen[s]:
            seen[_bfs_parents(g, int(s))[1]] = True
    return seen


def is_tree(g: Graph) -> bool:
    return g.num_edges == g.n - 1 and is_connected(g)


def tree_path(g: Graph, source, target) -> list[int]:
    """The unique path from ``source`` to ``target`` in a tree."""
    if not is_tree(g):
        raise GraphError("not-a-tree")
    parent, _ = _bfs_parents(g, source)
    path = [int(target)]
    while path[-1] != source:
        path.append(int(parent[path[-1]]))
    return path[::-1]


def max_root_path_degree_sum(g: Graph, root) -> int:
    """max over root-to-node paths p of D_p (attained at a leaf)."""
    if not is_tree(g):
        raise GraphError("not-a-tree")
    parent, order = _bfs_parents(g, root)
    total = np.zeros(g.n, dtype=np.int64)
    for v in order:
        total[v] = g.degrees[v] + (total[parent[v]] if parent[v] >= 0 else 0)
    return int(total.max())


def max_path_degree_sum(g: Graph) -> int:
    """max over all simple paths p of D_p in a tree (node-weighted diameter)."""
    if not is_tree(g):
        raise GraphError("not-a-tree")
    parent, order = _bfs_parents(g, 0)
    down = g.degrees.astype(np.int64).copy()
    best = int(down.max())
    top = np.zeros((g.n, 2), dtype=np.int64)  # two largest child chains
    for v in reversed(order):
        down[v] = g.degrees[v] + top[v, 0]
        best = max(best, int(g.degrees[v] + top[v, 0] + top[v, 1]))
        p = parent[v]
        if p >= 0:
            d = down[v]
            if d > top[p, 0]:
                top[p, 1], top[p, 0] = top[p, 0], d
            elif d > top[p, 1]:
                top[p, 1] = d
    return best


# ---------------------------------------------------------------------------
# validation

def _graph_violations(g):
    out = []
    src = np.repeat(np.arange(g.n), g.degrees)
    if np.any(src == g.indices):
        out.append("self-loop present")
    if len(g.indices) and (g.indices.min() < 0 or g.indices.max() >= g.n):
        out.append("node id out of range")
        return out
    same_row = src[1:] == src[:-1]
    if np.any(same_row & (g.indices[1:] <= g.indices[:-1])):
        out.append("neighbour list unsorted or duplicated")
    fwd = set(zip(src.tolist(), g.indices.tolist()))
    if any((b, a) not in fwd for a, b in fwd):
        out.append("adjacency not symmetric")
    return out


def _edge_set(g, nodes):
    nodes = set(int(v) for v in nodes)
    out = set()
    for v in nodes:
        for w in g.neighbors(v):
            w = int(w)
            if w in nodes and v < w:
                out.add((v, w))
    return out


def _lct_violations(g, lay: LctLayout):
    out = []
    if len(lay.leaf_nodes) != lay.k or len(lay.branch_nodes) != lay.k - 1:
        out.append("LCT part sizes wrong")
    if lay.offset + lay.size > g.n:
        return out + ["LCT exceeds graph"]
    have = _edge_set(g, lay.nodes)
    clique = {tuple(e) for e in lay.clique_edges().tolist()}
    tree = {tuple(e) for e in lay.tree_edges().tolist()}
    if not clique <= have:
        out.append("leaf-clique incomplete")
    if not tree <= have:
        out.append("branch-tree edge missing")
    if have - clique - tree:
        out.append("unexpected edge inside LCT")
    return out


def _separation_violations(g, lay: SeparationLayout):
    out = []
    expected = 2 * lay.m * lay.log_n + 1
    if g.degree(lay.r) != expected:
        out.append(f"deg(r) = {g.degree(lay.r)}, expected {expected}")
    parts = [lay.alpha, lay.zeta] + list(lay.blocks)
    for part in parts:
        out += _lct_violations(g, part)
    block = np.full(g.n, -1, dtype=np.int64)
    for i, part in enumerate(parts):
        block[part.nodes] = i
    src = np.repeat(np.arange(g.n), g.degrees)
    inside = block[src] >= 0
    external = inside & (block[src] != block[g.indices])
    per_node = np.bincount(src[external], minlength=g.n)
    bridge_end = set(lay.bridge) if lay.bridge else set()
    over = [v for v in np.flatnonzero(per_node > 1) if v not in bridge_end or per_node[v] > 2]
    if over:
        out.append(f"external-edge bound violated at {len(over)} LCT nodes")
    if not g.has_edge(lay.r, lay.r_zeta):
        out.append("edge r-r_zeta missing")
    for i, d in enumerate(lay.blocks):
        if not g.has_edge(d.root, lay.zeta.leaf_nodes[i]):
            out.append(f"edge r_{i + 1}-l_zeta missing")
        if not g.has_edge(d.leaf_nodes[-1], lay.c_alpha[i]):
            out.append(f"edge l_{i + 1},l-c_{i + 1} missing")
    if lay.twin is not None:
        out += _separation_violations(g, lay.twin)
        if not g.has_edge(*lay.bridge):
            out.append("bridge between copies missing")
    return out


def _tightness_violations(g, lay: TightnessLayout):
    out = []
    k, k2 = lay.k, lay.k * lay.k
    A, B = set(lay.A.tolist()), set(lay.B.tolist())
    if any(int(w) in A for a in lay.A for w in g.neighbors(a)):
        out.append("A independent set violated")
    if any(int(w) in B for b in lay.B for w in g.neighbors(b)):
        out.append("B independent set violated")
    if any(not g.has_edge(a, b) for a in lay.A for b in lay.B):
        out.append("A-B bipartite incomplete")
    member = np.full(g.n, -1, dtype=np.int64)
    member[lay.cliques.reshape(-1)] = np.arange(k2 * k2).repeat(k)
    for i, b in enumerate(lay.B):
        nb = g.neighbors(b)
        tags = member[nb]
        tags = tags[tags >= 0]
        expect = np.arange(i * k2, (i + 1) * k2)
        if len(tags) != k2 or not np.array_equal(np.sort(tags), expect):
            out.append("bridge structure violated")
            break
        if not all(g.has_edge(b, t) for t in lay.bridges[i]):
            out.append("bridge structure violated")
            break
    for clique in lay.cliques.reshape(-1, k):
        if any(not g.has_edge(x, y) for x in clique for y in clique if x < y):
            out.append("clique incomplete")
            break
    if g.min_degree != k - 1 or g.max_degree != 2 * k2:
        out.append(f"degree bounds violated: delta={g.min_degree}, Delta={g.max_degree}")
    return out


def validate(g: Graph, layout=None) -> list[str]:
    """Check graph and layout invariants; an empty list means valid."""
    out = _graph_violations(g)
    if isinstance(layout, LctLayout):
        out += _lct_violations(g, layout)
    elif isinstance(layout, SeparationLayout):
        out += _separation_violations(g, layout)
    elif isinstance(layout, TightnessLayout):
        out += _tightness_violations(g, layout)
    elif layout is not None:
        out.append(f"unknown layout type {type(layout).__name__}")
    return out


def with_edges(g: Graph, add=(), remove=()) -> Graph:
    """Copy of ``g`` with edges added or removed (fault injection, fragments)."""
    drop = {(min(a, b), max(a, b)) for a, b in remove}
    kept = [tuple(e) for e in g.edges().tolist() if tuple(e) not in drop]
    return Graph.from_edges(g.n, kept + [tuple(e) for e in add], g.labels)
