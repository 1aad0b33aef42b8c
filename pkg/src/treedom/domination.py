"""Stochastic domination between plus/minus Ising states on the d-ary tree.

Two completely homogeneous chains are ordered iff both "up" transition
probabilities are ordered.  For the extremal Ising states this reduces to
``t(c1) >= t(c2) + |J1 - J2|``; the thresholds below are the smallest fields
at which the plus (``f``) or minus (``g``) state with coupling J2 dominates a
given extremal state with coupling J1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import ConsistencyError, DomainError, SingularityError
from .ising_tree import (
    ModelParams,
    TransitionMatrix2,
    critical_coupling,
    h_star,
    phi,
    phi_partials,
    solve_fixed_points,
    t_extreme,
    t_star,
    transition_matrix,
)

BRANCH_TOL = 1e-12

CLOSED, OPEN = "closed", "open"
FLAT, CURVE = "flat", "curve"
PLUS, MINUS = "plus", "minus"


def _check_sign(sign: str) -> None:
    if sign not in (PLUS, MINUS):
        raise DomainError(f"sign must be 'plus' or 'minus', got {sign!r}")


@dataclass(frozen=True)
class ChainSpec:
    """The plus or minus Ising state with parameters (d, J, h)."""

    d: int
    J: float
    h: float
    sign: str

    def __post_init__(self):
        _check_sign(self.sign)
        ModelParams(self.d, self.J, self.h)

    @cached_property
    def t(self) -> float:
        return t_extreme(ModelParams(self.d, self.J, self.h), self.sign)

    @cached_property
    def matrix(self) -> TransitionMatrix2:
        return transition_matrix(self.J, self.t)


@dataclass(frozen=True)
class Threshold:
    value: float
    attained: str  # CLOSED or OPEN
    branch: str  # FLAT or CURVE

    def contains(self, h: float) -> bool:
        """Membership of h in the (upward closed) set of dominating fields."""
        if h > self.value:
            return True
        if h == self.value:
            return self.attained == CLOSED
        return False


@dataclass(frozen=True)
class ContinuityVerdict:
    point: float
    verdict: str  # "continuous" or "discontinuous"
    case_label: str
    a: float
    b: float

    @property
    def continuous(self) -> bool:
        return self.verdict == "continuous"


@dataclass(frozen=True)
class MonotoneCheck:
    derivative: float
    in_region: bool


def _entry_geq(p_up: float, p_down: float, q_up: float, q_down: float) -> bool:
    # Compare P >= Q on the complementary entry when both are close to 1, so
    # that saturation of 1 - tiny does not hide the ordering.
    if p_up <= 0.5 or q_up <= 0.5:
        return p_up >= q_up
    return p_down <= q_down


def mc_dominates(P: TransitionMatrix2, Q: TransitionMatrix2) -> bool:
    """True iff P(-1, 1) >= Q(-1, 1) and P(1, 1) >= Q(1, 1)."""
    return _entry_geq(P.p_mp, P.p_mm, Q.p_mp, Q.p_mm) and _entry_geq(P.p_pp, P.p_pm, Q.p_pp, Q.p_pm)


def chain_dominates(c1: ChainSpec, c2: ChainSpec) -> bool:
    """Does the state described by ``c1`` dominate the one described by ``c2``?"""
    verdict = mc_dominates(c1.matrix, c2.matrix)
    reduced = (c1.t - c1.J >= c2.t - c2.J) and (c1.t + c1.J >= c2.t + c2.J)
    if verdict != reduced:
        raise ConsistencyError(
            f"matrix criterion ({verdict}) and reduced inequality ({reduced}) disagree "
            f"for t1={c1.t!r}, J1={c1.J!r}, t2={c2.t!r}, J2={c2.J!r}"
        )
    return verdict


def tau(J1: float, J2: float, h1: float, which: str, d: int) -> float:
    _check_sign(which)
    ModelParams(d, J2, 0.0)
    return t_extreme(ModelParams(d, J1, h1), which) + abs(J1 - J2)


@dataclass(frozen=True)
class _Plateau:
    h_star: float
    t_star: float
    lower: float  # t_-(J2, -h*(J2))
    upper: float  # t_+(J2, h*(J2))


def _plateau(d: int, J2: float) -> _Plateau | None:
    if J2 <= critical_coupling(d):
        return None
    hs = h_star(d, J2)
    ts = t_star(d, J2)
    lower = solve_fixed_points(ModelParams(d, J2, -hs)).t_minus
    upper = solve_fixed_points(ModelParams(d, J2, hs)).t_plus
    return _Plateau(hs, ts, lower, upper)


def _curve(d: int, J2: float, t: float) -> Threshold:
    return Threshold(t - d * phi(J2, t), CLOSED, CURVE)


def psi(d: int, J2: float, t: float) -> Threshold:
    """Smallest field h with t_+(J2, h) >= t."""
    p = _plateau(d, J2)
    if p is not None and p.lower - BRANCH_TOL <= t < p.t_star:
        return Threshold(-p.h_star, CLOSED, FLAT)
    return _curve(d, J2, t)


def theta(d: int, J2: float, t: float) -> Threshold:
    """Infimum of fields h with t_-(J2, h) >= t; not attained on the plateau."""
    p = _plateau(d, J2)
    if p is not None and -p.t_star < t <= p.upper + BRANCH_TOL:
        return Threshold(p.h_star, OPEN, FLAT)
    return _curve(d, J2, t)


def f_threshold(J1: float, J2: float, h1: float, which: str, d: int) -> Threshold:
    """inf{h : plus state (J2, h) dominates the `which` state (J1, h1)}."""
    return psi(d, J2, tau(J1, J2, h1, which, d))


def g_threshold(J1: float, J2: float, h1: float, which: str, d: int) -> Threshold:
    """inf{h : minus state (J2, h) dominates the `which` state (J1, h1)}."""
    return theta(d, J2, tau(J1, J2, h1, which, d))


def envelope_bounds(J1: float, J2: float, h1: float, N: int) -> tuple[float, float]:
    """Degree-only envelope for the plus/plus threshold on a graph of max degree N."""
    if N < 1:
        raise DomainError(f"max degree must be >= 1, got N={N}")
    return h1 - N * (J1 + J2), h1 + N * abs(J1 - J2)


def continuity_classify(J1: float, J2: float, d: int) -> ContinuityVerdict:
    """Continuity of h1 -> f_+(J1, J2, h1) at h1 = -h*(J1)."""
    ModelParams(d, J1, 0.0)
    ModelParams(d, J2, 0.0)
    jc = critical_coupling(d)
    hs1 = h_star(d, J1)
    sol = solve_fixed_points(ModelParams(d, J1, -hs1))
    a = sol.t_minus + abs(J1 - J2)
    b = sol.t_plus + abs(J1 - J2)

    if J1 <= jc:
        label, cont = "J1<=Jc", True
    elif J1 == J2:
        label, cont = "J1=J2", True
    elif J2 <= jc:
        label, cont = "J1>Jc,J2<=Jc", False
    else:
        label = "J1,J2>Jc,J1!=J2"
        p = _plateau(d, J2)
        cont = (p.lower <= a < p.t_star) and (p.lower <= b <= p.t_star)
    return ContinuityVerdict(-hs1, "continuous" if cont else "discontinuous", label, a, b)


def f_plus_jump(J1: float, J2: float, d: int, step: float = 1e-7) -> float:
    """|f_+(-h*(J1) + step) - f_+(-h*(J1) - step)|, the numeric jump at -h*(J1)."""
    h0 = -h_star(d, J1)
    right = f_threshold(J1, J2, h0 + step, PLUS, d).value
    left = f_threshold(J1, J2, h0 - step, PLUS, d).value
    return abs(right - left)


def monotone_in_J_check(d: int, J: float, h: float) -> MonotoneCheck:
    """Implicit derivative of t_+(J, h) in J, and whether J -> plus state is
    guaranteed increasing at (J, h)."""
    t = t_extreme(ModelParams(d, J, h), PLUS)
    dJ, dt = phi_partials(J, t)
    denom = 1.0 - d * dt
    if denom <= 0.0:
        raise SingularityError(f"1 - d*phi_t = {denom:.3e} <= 0 at J={J}, t={t}")
    in_region = (h >= 0 and J >= critical_coupling(d)) or (h < 0 and h_star(d, J) > -h)
    return MonotoneCheck(d * dJ / denom, in_region)
