"""Ising model on the homogeneous d-ary tree (every site has d+1 neighbours).

Closed forms for the critical coupling and the tangency curve, the cavity
function ``phi``, and a root solver for ``t = h + d*phi(J, t)`` whose largest
and smallest roots parametrize the plus and minus states.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConsistencyError, DomainError

TANGENCY_TOL = 1e-9
ROOT_TOL = 1e-12


def _finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite input {v!r}")


def _check_coupling(J: float) -> None:
    _finite(J)
    if J <= 0:
        raise DomainError(f"coupling must be positive, got J={J}")


def _check_branching(d: int) -> None:
    if int(d) != d or d < 2:
        raise DomainError(f"branching number must be an integer >= 2, got d={d}")


def _log1pexp_neg(x: float) -> float:
    # log(1 + exp(-x)) for x >= 0
    return math.log1p(math.exp(-x))


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ModelParams:
    d: int
    J: float
    h: float

    def __post_init__(self):
        _check_branching(self.d)
        _check_coupling(self.J)
        _finite(self.h)


class RootClass(enum.Enum):
    UNIQUE = "Unique"
    TANGENT_PAIR = "TangentPair"
    TRIPLE = "Triple"

    @property
    def count(self) -> int:
        return {"Unique": 1, "TangentPair": 2, "Triple": 3}[self.value]


@dataclass(frozen=True)
class FixedPointSolution:
    roots: tuple[float, ...]
    kind: RootClass
    residuals: tuple[float, ...]

    @property
    def t_minus(self) -> float:
        return self.roots[0]

    @property
    def t_plus(self) -> float:
        return self.roots[-1]


@dataclass(frozen=True)
class TransitionMatrix2:
    """Two-state transition matrix on spins (-1, +1); ``p_mp`` is P(-1, +1)."""

    p_mm: float
    p_mp: float
    p_pm: float
    p_pp: float

    def __post_init__(self):
        for name in ("p_mm", "p_mp", "p_pm", "p_pp"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v} is not a probability")
        if abs(self.p_mm + self.p_mp - 1.0) > 1e-14 or abs(self.p_pm + self.p_pp - 1.0) > 1e-14:
            raise DomainError("rows of a transition matrix must sum to 1")

    @classmethod
    def from_plus_entries(cls, p_mp: float, p_pp: float) -> "TransitionMatrix2":
        return cls(1.0 - p_mp, p_mp, 1.0 - p_pp, p_pp)

    def as_array(self):
        import numpy as np

        return np.array([[self.p_mm, self.p_mp], [self.p_pm, self.p_pp]])


@dataclass(frozen=True)
class Distribution2:
    prob_minus: float
    prob_plus: float

    def __post_init__(self):
        if abs(self.prob_minus + self.prob_plus - 1.0) > 1e-14:
            raise DomainError("distribution must sum to 1")


def phi(J: float, t: float) -> float:
    """Return 0.5 * log(cosh(t + J) / cosh(t - J)).

    Evaluated without cosh so that |t| up to ~1e300 does not overflow; the
    function is odd in t and tends to J as t -> infinity.
    """
    _check_coupling(J)
    _finite(t)
    u = abs(t)
    # log cosh(x) = |x| + log1p(exp(-2|x|)) - log 2; the |x| parts differ by 2*min(u, J)
    val = 0.5 * (2.0 * min(u, J) + _log1pexp_neg(2.0 * (u + J)) - _log1pexp_neg(2.0 * abs(u - J)))
    return val if t >= 0 else -val


def phi_partials(J: float, t: float) -> tuple[float, float]:
    """Partial derivatives (d phi / dJ, d phi / dt)."""
    _check_coupling(J)
    _finite(t)
    a = math.tanh(J + t)
    b = math.tanh(J - t)
    return 0.5 * (a - b), 0.5 * (a + b)


def critical_coupling(d: int) -> float:
    _check_branching(d)
    return 0.5 * math.log((d + 1) / (d - 1))


def t_star(d: int, J: float) -> float:
    """Maximizer over t >= 0 of d*phi(J, t) - t (zero in the uniqueness regime)."""
    _check_branching(d)
    _check_coupling(J)
    if J <= critical_coupling(d):
        return 0.0
    th = math.tanh(J)
    ratio = (d - 1.0 / th) / (d - th)
    return math.atanh(math.sqrt(max(ratio, 0.0)))


def h_star(d: int, J: float) -> float:
    """max_{t >= 0} (d*phi(J, t) - t); positive exactly when J > J_c."""
    _check_branching(d)
    _check_coupling(J)
    if J <= critical_coupling(d):
        return 0.0
    th = math.tanh(J)
    inner = (d * th - 1.0) / (d / th - 1.0)
    val = d * math.atanh(math.sqrt(inner)) - t_star(d, J)
    return max(val, 0.0)


def _bisect(f, lo: float, hi: float) -> float:
    """Root of f on [lo, hi] given a sign change, bisected until the bracket
    cannot be split in floating point."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ConsistencyError(f"no sign change on [{lo}, {hi}]")
    best, fbest = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if abs(fm) < abs(fbest):
            best, fbest = mid, fm
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return best


def classify(params: ModelParams, tangency_tol: float = TANGENCY_TOL) -> RootClass:
    hs = h_star(params.d, params.J)
    gap = abs(params.h) - hs
    if hs == 0.0:
        return RootClass.UNIQUE
    if abs(gap) <= tangency_tol:
        return RootClass.TANGENT_PAIR
    return RootClass.UNIQUE if gap > 0 else RootClass.TRIPLE


def solve_fixed_points(
    params: ModelParams,
    tangency_tol: float = TANGENCY_TOL,
    root_tol: float = ROOT_TOL,
) -> FixedPointSolution:
    """All real solutions of t = h + d*phi(J, t), ascending and classified.

    The class comes from comparing |h| with h_star; roots are then bracketed on
    the monotone pieces of t -> h + d*phi(J, t) - t, which change monotonicity
    only at +-t_star.
    """
    d, J, h = params.d, params.J, params.h
    kind = classify(params, tangency_tol)
    ts = t_star(d, J)
    bound = abs(h) + d * J + 1.0

    def g(t: float) -> float:
        return h + d * phi(J, t) - t

    if kind is RootClass.UNIQUE:
        if ts == 0.0:
            roots = [_bisect(g, -bound, bound)]
        elif h > 0:
            roots = [_bisect(g, ts, bound)]
        else:
            roots = [_bisect(g, -bound, -ts)]
    elif kind is RootClass.TANGENT_PAIR:
        if h > 0:
            roots = [-ts, _bisect(g, ts, bound)]
        else:
            roots = [_bisect(g, -bound, -ts), ts]
    else:
        roots = [
            _bisect(g, -bound, -ts),
            _bisect(g, -ts, ts),
            _bisect(g, ts, bound),
        ]
    roots.sort()
    if len(roots) != kind.count or any(b <= a for a, b in zip(roots, roots[1:])):
        raise ConsistencyError(f"root bracketing disagrees with class {kind.value}: {roots}")
    residuals = tuple(abs(g(t)) for t in roots)
    tangent = {-ts, ts} if kind is RootClass.TANGENT_PAIR else set()
    for t, r in zip(roots, residuals):
        if t not in tangent and r > root_tol:
            raise ConsistencyError(f"bisected root {t} has residual {r:.3e} > {root_tol:.1e}")
    return FixedPointSolution(tuple(roots), kind, residuals)


def t_extreme(params: ModelParams, sign: str) -> float:
    """t_+ (sign='plus') or t_- (sign='minus') for the given parameters."""
    sol = solve_fixed_points(params)
    if sign == "plus":
        return sol.t_plus
    if sign == "minus":
        return sol.t_minus
    raise DomainError(f"sign must be 'plus' or 'minus', got {sign!r}")


def transition_matrix(J: float, t: float) -> TransitionMatrix2:
    """Edge transition matrix of the completely homogeneous chain labelled by t."""
    _check_coupling(J)
    _finite(t)
    # e^{t-J} / (2 cosh(J-t)) = logistic(2(t-J)), e^{J+t} / (2 cosh(J+t)) = logistic(2(t+J))
    p_mp = logistic(2.0 * (t - J))
    p_pp = logistic(2.0 * (t + J))
    return TransitionMatrix2(logistic(2.0 * (J - t)), p_mp, logistic(-2.0 * (J + t)), p_pp)


def stationary(P: TransitionMatrix2) -> Distribution2:
    if min(P.p_mm, P.p_mp, P.p_pm, P.p_pp) <= 0.0:
        raise DomainError("stationary distribution needs all entries positive")
    plus = P.p_mp / (P.p_mp + P.p_pm)
    return Distribution2(1.0 - plus, plus)
