"""Exact finite-tree ground truth.

Dense configuration distributions on small rooted trees, a max-flow test for
the existence of a monotone coupling, a brute-force check over all up-sets,
q-state Potts transfer recursions, and a heat-bath Gibbs sampler.

Configurations are indexed by integers: bit i is the spin of vertex i, with
+1 stored as 1 and -1 as 0.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .errors import DomainError, SizeError
from .ising_tree import Distribution2, TransitionMatrix2

DEFAULT_MAX_VERTICES = 20
BRUTE_MAX_VERTICES = 5
FLOW_TOL = 1e-10
UPSET_SLACK = 1e-12


def max_vertices() -> int:
    """Vertex cap for exact distribution ops (env GD_MAX_VERTICES overrides)."""
    env = os.environ.get("GD_MAX_VERTICES")
    return int(env) if env else DEFAULT_MAX_VERTICES


@dataclass(frozen=True)
class FiniteTree:
    """Rooted tree on vertices 0..n-1 with root 0 and parents[v] < v."""

    parents: tuple[int, ...]
    d: int = 2
    depth: int | None = None

    def __post_init__(self):
        if not self.parents or self.parents[0] != -1:
            raise DomainError("vertex 0 must be the root (parent -1)")
        for v, p in enumerate(self.parents[1:], start=1):
            if not 0 <= p < v:
                raise DomainError(f"vertex {v} has invalid parent {p}")

    @property
    def n(self) -> int:
        return len(self.parents)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.n)]
        for v, p in enumerate(self.parents[1:], start=1):
            kids[p].append(v)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def vertex_depths(self) -> np.ndarray:
        dep = np.zeros(self.n, dtype=np.int64)
        for v in range(1, self.n):
            dep[v] = dep[self.parents[v]] + 1
        return dep

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.array([len(c) for c in self.children], dtype=np.int64)
        deg[1:] += 1
        return deg

    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v, p in enumerate(self.parents) if p >= 0]


def tree_size(d: int, depth: int) -> int:
    if depth == 0:
        return 1
    return 1 + (d + 1) * (d**depth - 1) // (d - 1)


def build_tree(d: int, depth: int, cap: int | None = None) -> FiniteTree:
    """Ball of radius ``depth`` around a vertex of the d-ary tree, BFS indexed."""
    if int(d) != d or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d}")
    if int(depth) != depth or depth < 0:
        raise DomainError(f"depth must be a non-negative integer, got {depth}")
    cap = max_vertices() if cap is None else cap
    size = tree_size(d, depth)
    if size > cap:
        raise SizeError(f"tree with d={d}, depth={depth} has {size} vertices > cap {cap}")
    parents = [-1]
    frontier = [0]
    for level in range(depth):
        nxt = []
        for v in frontier:
            for _ in range(d + 1 if level == 0 else d):
                parents.append(v)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return FiniteTree(tuple(parents), d=d, depth=depth)


@dataclass(frozen=True)
class ConfigDistribution:
    tree: FiniteTree
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (1 << self.tree.n,):
            raise DomainError(f"expected {1 << self.tree.n} probabilities, got {self.probs.shape}")
        if (self.probs < 0).any() or abs(self.probs.sum() - 1.0) > 1e-12:
            raise DomainError("probabilities must be non-negative and sum to 1")

    def marginal_plus(self) -> np.ndarray:
        bits = _config_bits(self.tree.n)
        return self.probs @ bits


@lru_cache(maxsize=32)
def _config_bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)


def _check_cap(tree: FiniteTree) -> None:
    cap = max_vertices()
    if tree.n > cap:
        raise SizeError(f"{tree.n} vertices exceeds the exact-distribution cap {cap}")


def chain_distribution(tree: FiniteTree, P: TransitionMatrix2, root_dist: Distribution2) -> ConfigDistribution:
    """Law of a tree-indexed Markov chain: root law times one factor per edge."""
    _check_cap(tree)
    n = tree.n
    bits = _config_bits(n).astype(np.int64)
    mat = P.as_array()
    probs = np.where(bits[:, 0] == 1, root_dist.prob_plus, root_dist.prob_minus)
    for v in range(1, n):
        probs = probs * mat[bits[:, tree.parents[v]], bits[:, v]]
    return ConfigDistribution(tree, probs / probs.sum())


def product_distribution(tree: FiniteTree, p: float) -> ConfigDistribution:
    _check_cap(tree)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    k = _config_bits(tree.n).sum(axis=1)
    probs = p**k * (1.0 - p) ** (tree.n - k)
    return ConfigDistribution(tree, probs)


def _check_pair(D1: ConfigDistribution, D2: ConfigDistribution) -> None:
    if D1.tree.parents != D2.tree.parents:
        raise DomainError("distributions live on different trees")


def coupling_flow(D1: ConfigDistribution, D2: ConfigDistribution) -> float:
    """Max flow pushing the mass of D2 up the configuration lattice into D1.

    Source -> eta carries D2(eta), eta -> sink carries D1(eta), and each
    lattice cover eta -> eta + {i} is uncapacitated.  Every pair eta <= xi is
    joined by a monotone path of covers, so total flow 1 is equivalent to a
    coupling of (D2, D1) supported on {eta <= xi}.
    """
    _check_pair(D1, D2)
    n = D1.tree.n
    G = nx.DiGraph()
    G.add_nodes_from(["s", "t"])
    G.add_nodes_from(range(1 << n))
    for eta in range(1 << n):
        if D2.probs[eta] > 0:
            G.add_edge("s", eta, capacity=float(D2.probs[eta]))
        if D1.probs[eta] > 0:
            G.add_edge(eta, "t", capacity=float(D1.probs[eta]))
        for i in range(n):
            if not eta >> i & 1:
                G.add_edge(eta, eta | (1 << i))
    return nx.maximum_flow_value(G, "s", "t")


def dominates_exact(D1: ConfigDistribution, D2: ConfigDistribution, tol: float = FLOW_TOL) -> bool:
    """True iff D1 stochastically dominates D2."""
    return coupling_flow(D1, D2) >= 1.0 - tol


@lru_cache(maxsize=8)
def upset_masks(n: int) -> np.ndarray:
    """Boolean matrix whose rows are all up-sets of {0,1}^n (empty set included)."""
    if n > BRUTE_MAX_VERTICES:
        raise SizeError(f"up-set enumeration limited to {BRUTE_MAX_VERTICES} vertices")
    size = 1 << n
    above = np.array([[(a & ~x) == 0 for x in range(size)] for a in range(size)])
    masks = []

    def extend(start: int, chosen: list[int], cover: np.ndarray) -> None:
        masks.append(cover.copy())
        for e in range(start, size):
            if cover[e] or any((e & ~a) == 0 for a in chosen):
                # e already lies above a chosen element, or below one
                continue
            chosen.append(e)
            extend(e + 1, chosen, cover | above[e])
            chosen.pop()

    extend(0, [], np.zeros(size, dtype=bool))
    return np.array(masks)


def dominates_brute(D1: ConfigDistribution, D2: ConfigDistribution, slack: float = UPSET_SLACK) -> bool:
    """True iff D1(U) >= D2(U) for every up-set U (|V| <= 5)."""
    _check_pair(D1, D2)
    M = upset_masks(D1.tree.n)
    return bool((M @ D1.probs >= M @ D2.probs - slack).all())


def product_dominates_exact(D: ConfigDistribution, p: float) -> bool:
    return dominates_exact(D, product_distribution(D.tree, p))


def product_threshold_exact(D: ConfigDistribution, tol: float = 1e-9) -> float:
    """Largest p with D >= gamma_p, by bisection on the monotone verdict."""
    lo, hi = 0.0, 1.0
    if product_dominates_exact(D, hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if product_dominates_exact(D, mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Potts transfer recursions


def _potts_kernel(q: int, J: float) -> np.ndarray:
    return np.ones((q, q)) + (math.exp(2.0 * J) - 1.0) * np.eye(q)


def _subtree_message(q: int, J: float, d: int, depth: int) -> np.ndarray:
    """Normalized root weights of a subtree whose vertices have d children,
    truncated after ``depth`` free levels below the root, with every vertex
    beyond the truncation fixed to spin 1."""
    K = _potts_kernel(q, J)
    m = K[:, 0] ** d
    m = m / m.sum()
    for _ in range(depth):
        m = (K @ m) ** d
        m = m / m.sum()
    return m


def potts_subtree_ratio_exact(q: int, J: float, d: int, depth: int) -> float:
    """P(root = 1) / P(root = 2) on the truncated subtree with spin-1 boundary."""
    if depth < 0 or depth > 30:
        raise DomainError(f"depth must be in 0..30, got {depth}")
    m = _subtree_message(q, J, d, depth)
    return float(m[0] / m[1])


def all_minus_rate(q: int, J: float, r: int, d: int, depth: int, extra_depth: int = 80) -> float:
    """(sum_{i<=r} pi^1(X == i on V_n)) ** (1/|V_n|), n = ``depth``.

    pi^1 is the spin-1 boundary Potts measure on the full tree, realised as
    the finite-volume measure with boundary ``extra_depth`` levels below V_n.
    """
    if depth < 0 or depth > 20:
        raise DomainError(f"depth must be in 0..20, got {depth}")
    if not 1 <= r <= q - 1:
        raise DomainError(f"r must be in 1..q-1, got {r}")
    logK = np.log(_potts_kernel(q, J))
    outside = _subtree_message(q, J, d, extra_depth)
    log_in = logsumexp(logK + np.log(outside)[None, :], axis=1)
    size = tree_size(d, depth)

    if depth == 0:
        leaf = (d + 1) * log_in
        log_z = logsumexp(leaf)
        n_outer = 1
    else:
        leaf = d * log_in
        u = leaf
        for _ in range(depth - 1):
            u = d * logsumexp(logK + u[None, :], axis=1)
        log_z = logsumexp((d + 1) * logsumexp(logK + u[None, :], axis=1))
        n_outer = (d + 1) * d ** (depth - 1)
    log_const = (size - 1) * 2.0 * J + n_outer * leaf[:r]
    log_sum = logsumexp(log_const) - log_z
    return float(math.exp(log_sum / size))


# ---------------------------------------------------------------------------
# Heat-bath sampler


@dataclass(frozen=True)
class SampleResult:
    mean_plus: np.ndarray
    stderr: np.ndarray
    sweeps_used: int


def gibbs_sample(
    tree: FiniteTree,
    J: float,
    h: float,
    boundary: str,
    sweeps: int,
    seed: int,
    batches: int = 50,
) -> SampleResult:
    """Heat-bath sampling of the Ising model on ``tree`` with a fixed-spin,
    or free, exterior.

    Each vertex of the d-ary tree has d + 1 neighbours; those missing from
    ``tree`` form the exterior, held at +1 (plus), -1 (minus) or absent
    (free).  A sweep updates all even-depth vertices then all odd-depth ones;
    vertices of equal parity share no edge, so this is a sequential sweep.
    The first half of the sweeps is discarded; standard errors come from
    batch means.
    """
    if boundary not in ("plus", "minus", "free"):
        raise DomainError(f"boundary must be plus, minus or free, got {boundary!r}")
    if sweeps < 2:
        raise DomainError("need at least 2 sweeps")
    if J < 0 or not math.isfinite(J) or not math.isfinite(h):
        raise DomainError("J must be >= 0 and J, h finite")
    n = tree.n
    rng = np.random.default_rng(seed)

    rows, cols = zip(*tree.edges()) if n > 1 else ((), ())
    A = sp.coo_matrix((np.ones(2 * len(rows)), (rows + cols, cols + rows)), shape=(n, n)).tocsr()
    missing = (tree.d + 1) - tree.degrees
    ext = {"plus": 1.0, "minus": -1.0, "free": 0.0}[boundary] * missing
    base_field = h + J * ext

    if boundary == "plus":
        s = np.ones(n)
    elif boundary == "minus":
        s = -np.ones(n)
    else:
        s = rng.choice([-1.0, 1.0], size=n)

    parity = tree.vertex_depths % 2
    classes = []
    for k in (0, 1):
        idx = np.flatnonzero(parity == k)
        if idx.size:
            classes.append((idx, A[idx], base_field[idx]))

    burn = sweeps // 2
    kept = sweeps - burn
    batches = max(1, min(batches, kept))
    edges = np.linspace(0, kept, batches + 1).astype(int)
    sums = np.zeros((batches, n))
    b = 0
    for sweep in range(sweeps):
        for idx, rows_A, field0 in classes:
            field = field0 + J * (rows_A @ s)
            p_plus = 0.5 * (1.0 + np.tanh(field))
            s[idx] = np.where(rng.random(idx.size) < p_plus, 1.0, -1.0)
        if sweep >= burn:
            k = sweep - burn
            while k >= edges[b + 1]:
                b += 1
            sums[b] += s
    counts = np.diff(edges)[:, None]
    batch_means = (sums / counts + 1.0) / 2.0
    mean = batch_means.T @ np.diff(edges) / kept
    if batches > 1:
        stderr = batch_means.std(axis=0, ddof=1) / math.sqrt(batches)
    else:
        stderr = np.full(n, np.nan)
    return SampleResult(mean, stderr, kept)
