"""Fuzzy Potts model on the d-ary tree.

The q-state Potts spins {1..r} are read as -1 and {r+1..q} as +1.  The free
fuzzy measure is a two-state tree chain, so its product-measure threshold is
explicit.  The plus-boundary Potts measure is summarised by two odds ratios:
``c`` for a subtree (d children per vertex) and ``b`` for the root (d+1
neighbours).  When ``c > 1`` (non-uniqueness), there is a window of product
densities p dominated by the free measure but not by the minus measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConsistencyError, DomainError, PreconditionError
from .ising_tree import TransitionMatrix2

FIXED_POINT_TOL = 1e-13
UNIQUE_TOL = 1e-9
MAX_ITER = 10_000_000


@dataclass(frozen=True)
class FuzzyParams:
    q: int
    J: float
    r: int
    d: int = 2

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 3:
            raise DomainError(f"q must be an integer >= 3, got {self.q}")
        if not math.isfinite(self.J) or self.J <= 0:
            raise DomainError(f"J must be positive and finite, got {self.J}")
        if int(self.r) != self.r or not 1 <= self.r <= self.q - 1:
            raise DomainError(f"r must be in 1..q-1, got {self.r}")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"d must be an integer >= 2, got {self.d}")

    @property
    def w(self) -> float:
        """Edge weight e^{2J} for agreeing Potts spins."""
        return math.exp(2.0 * self.J)

    @property
    def regime(self) -> bool:
        """e^{2J} >= q - 2, the parameter range covered by the witness result."""
        return self.w >= self.q - 2


@dataclass(frozen=True)
class RatioPair:
    c: float
    b: float
    a: float

    def __post_init__(self):
        if self.c < 1.0 or self.b < 1.0 or not 0.0 < self.a < 1.0:
            raise DomainError(f"invalid ratios c={self.c}, b={self.b}, a={self.a}")


@dataclass(frozen=True)
class RateBounds:
    sum_of_bases: float
    exact_rate: float
    simplified_bound: float

    @property
    def sum_exceeds_one(self) -> bool:
        return self.sum_of_bases > 1.0


@dataclass(frozen=True)
class WitnessInterval:
    """Half-open interval (lo, hi] of product densities."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def contains(self, p: float) -> bool:
        return self.lo < p <= self.hi

    def sample(self, n: int) -> list[float]:
        """n points strictly inside, plus the closed right endpoint."""
        if self.empty:
            return []
        pts = [self.lo + (self.hi - self.lo) * (k + 1) / (n + 1) for k in range(n)]
        return pts + [self.hi]


def free_chain(params: FuzzyParams) -> TransitionMatrix2:
    """Transition matrix of the free-boundary fuzzy Potts measure on the tree."""
    q, r, w = params.q, params.r, params.w
    den = w + q - 1
    return TransitionMatrix2((w + r - 1) / den, (q - r) / den, r / den, (w + q - r - 1) / den)


def free_product_threshold(params: FuzzyParams) -> float:
    """Largest p with the free fuzzy measure dominating the product measure gamma_p."""
    P = free_chain(params)
    if P.p_mp > P.p_pp:
        raise PreconditionError(
            "product-measure criterion for tree chains needs P(-1,1) <= P(1,1); "
            f"got {P.p_mp} > {P.p_pp}"
        )
    return P.p_mp


def c_map(params: FuzzyParams, x: float) -> float:
    """One step of the subtree odds-ratio recursion (d children)."""
    return _edge_ratio(params, x) ** params.d


def _edge_ratio(params: FuzzyParams, x: float) -> float:
    # (x w + q - 1) / (x + w + q - 2), written so that x = 1 gives exactly 1
    q, w = params.q, params.w
    return 1.0 + (x - 1.0) * (w - 1.0) / (x + w + q - 2)


def _c_map_slope_at_one(params: FuzzyParams) -> float:
    q, w = params.q, params.w
    return params.d * (w - 1) / (w + q - 1)


def subtree_ratio(params: FuzzyParams, tol: float = FIXED_POINT_TOL, max_iter: int = MAX_ITER) -> float:
    """Largest fixed point c >= 1 of the c-map, by monotone iteration from e^{2Jd}."""
    x = params.w ** params.d
    for _ in range(max_iter):
        nxt = c_map(params, x)
        if nxt > x * (1 + 1e-15):
            raise ConsistencyError(f"c-iteration increased: {x!r} -> {nxt!r}")
        if x - nxt < tol:
            x = nxt
            break
        x = nxt
    else:
        raise ConsistencyError(f"c-iteration did not converge in {max_iter} steps")
    # Slowly contracting onto the trivial fixed point: the stopping rule leaves
    # x - 1 ~ tol / (1 - slope); a non-trivial fixed point that close to 1 can
    # only appear where the slope at 1 reaches 1.
    if x - 1.0 < 1e-6 and _c_map_slope_at_one(params) < 1.0:
        x = 1.0
    return max(x, 1.0)


def root_ratio(params: FuzzyParams, c: float) -> RatioPair:
    """Root odds ratio b (d+1 neighbours) and root probability a of spin 1."""
    if c < 1.0:
        raise DomainError(f"c must be >= 1, got {c}")
    q = params.q
    b = _edge_ratio(params, c) ** (params.d + 1)
    a = b / (b + q - 1)
    one_minus_a = (q - 1) / (b + q - 1)
    if abs(b - (q - 1) * a / one_minus_a) > 1e-10 * b:
        raise ConsistencyError(f"b={b} inconsistent with a={a}")
    return RatioPair(c, b, a)


def ratios(params: FuzzyParams) -> RatioPair:
    return root_ratio(params, subtree_ratio(params))


def phase_unique(params: FuzzyParams) -> bool:
    """Plus-boundary Potts state equals the free one (c == 1)."""
    return abs(subtree_ratio(params) - 1.0) <= UNIQUE_TOL


def rate_bounds(params: FuzzyParams, ratios: RatioPair) -> RateBounds:
    """Growth-rate quantities for the all-minus probability under the minus measure.

    ``sum_of_bases`` adds the two geometric bases; ``exact_rate`` is the larger
    base, which is what the |V_n|-th root of the two-term mixture converges
    to; ``simplified_bound`` is the closed-form lower bound for the sum.
    """
    q, w, c = params.q, params.w, ratios.c
    base_one = c * w / (c * w + q - 1)
    base_other = w / (c + w + q - 2)
    return RateBounds(
        sum_of_bases=base_one + base_other,
        exact_rate=max(base_one, base_other),
        simplified_bound=(c * w + q - 2) / (c * w + q - 1),
    )


def witness_p(params: FuzzyParams) -> WitnessInterval:
    """Densities p dominated by the free measure but not by the minus measure."""
    if not params.regime:
        raise PreconditionError(f"need e^(2J) >= q - 2; got e^(2J)={params.w:.6g}, q={params.q}")
    c = subtree_ratio(params)
    if abs(c - 1.0) <= UNIQUE_TOL:
        c = 1.0
    q, r, w = params.q, params.r, params.w
    return WitnessInterval((q - r) / (c * w + q - 1), (q - r) / (w + q - 1))


def nondomination_certificate(params: FuzzyParams, p: float) -> bool:
    """True when the simplified rate bound exceeds 1 - p."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return rate_bounds(params, ratios(params)).simplified_bound > 1.0 - p


def strict_nondomination_certificate(params: FuzzyParams, p: float) -> bool:
    """Same test against the exact growth rate of the lower-bounding mixture."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return rate_bounds(params, ratios(params)).exact_rate > 1.0 - p
