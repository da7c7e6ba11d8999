"""Marginal-gain analysis for players who see the group composition.

An *informed* player knows how many cooperators its working group
holds and can compare strategies at that resolution, rather than
against the population-averaged fitness.  This module provides the
per-composition pairwise gains, the region classification they induce
over (group size, contribution) space, and the informed selection
field obtained when imitation is driven by anticipated post-switch
fitness instead of current average fitness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .game import (
    GameParams,
    PopulationState,
    effective_shares,
    marginal_return,
    payoff,
    relative_benefit,
)
from .sampling import fitness_at

__all__ = [
    "MarginalGains",
    "StateClass",
    "InformedFlow",
    "marginal_gains",
    "classify_state",
    "informed_field",
]


@dataclass(frozen=True)
class MarginalGains:
    """Pairwise payoff gains inside one working group.

    d_cd: gain of cooperating over defecting as a member,
    d_do: gain of defecting membership over staying outside,
    d_co: gain of cooperating membership over staying outside.
    All evaluated at the same others' contribution total.
    """

    d_cd: float
    d_do: float
    d_co: float


@dataclass(frozen=True)
class StateClass:
    """Sign pattern of the marginal gains plus its regime label.

    `signs` holds (sign d_cd, sign d_do, sign d_co) with values in
    {-1, 0, +1}.  `label` is "A" where cooperative membership beats
    both alternatives (stable full engagement), "B" where membership
    pays but cooperation does not (members free-ride), None elsewhere.
    """

    signs: tuple[int, int, int]
    label: str | None


@dataclass(frozen=True)
class InformedFlow:
    """Informed selection field at one state, with its switch-gain parts.

    delta_xy is the fitness change a strategy-x player anticipates from
    switching to y: fitness of y at the post-switch composition minus
    fitness of x at the current one.  Entries whose weight in the field
    vanishes are not evaluated and stay None.
    """

    x_dot: float
    y_dot: float
    delta_cd: float | None = None
    delta_dc: float | None = None
    delta_co: float | None = None
    delta_oc: float | None = None
    delta_do: float | None = None
    delta_od: float | None = None


def marginal_gains(params: GameParams, c_prime: float, n: int) -> MarginalGains:
    """Pairwise strategy gains for a group of n with others contributing c_prime.

    Computed in closed form from the marginal return and the effective
    shares; `payoff` subtraction gives the same numbers and serves as
    an independent cross-check in the test suite.
    """
    shares = effective_shares(params, n)
    r = marginal_return(params, c_prime, n)
    b_here = relative_benefit(params, c_prime, n)
    c = params.c
    d_cd = c * (r * shares.total - 1.0)
    d_do = c * (b_here * shares.eps1 - shares.kappa)
    d_co = c * (r * shares.total + b_here * shares.eps1 - 1.0 - shares.kappa)
    return MarginalGains(d_cd=d_cd, d_do=d_do, d_co=d_co)


def _sign(v: float) -> int:
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def classify_state(params: GameParams, c_prime: float, n: int) -> StateClass:
    """Classify one (group size, contribution) cell by its gain signs.

    Label "A" requires both threshold conditions strictly: the marginal
    return must clear the dilution threshold, R > 1/(eps1 + eps2), and
    joining as a cooperator must beat staying outside,
    b(C' + c) * eps1 > 1 - R * eps2 + kappa.  These are algebraically
    the sign conditions d_cd > 0 and d_co > 0; the sign-based reading
    is asserted against this one in the tests.
    """
    gains = marginal_gains(params, c_prime, n)
    shares = effective_shares(params, n)
    r = marginal_return(params, c_prime, n)
    b_next = relative_benefit(params, c_prime + params.c, n)
    cond_returns = r * shares.total > 1.0
    cond_joining = b_next * shares.eps1 > 1.0 - r * shares.eps2 + shares.kappa
    signs = (_sign(gains.d_cd), _sign(gains.d_do), _sign(gains.d_co))
    if cond_returns and cond_joining:
        label = "A"
    elif gains.d_cd < 0.0 and gains.d_do > 0.0:
        label = "B"
    else:
        label = None
    return StateClass(signs=signs, label=label)


def informed_field(params: GameParams, state: PopulationState) -> InformedFlow:
    """Selection field when imitation weighs anticipated post-switch fitness.

    Each of the six directed switches x -> y contributes its gain
    delta_xy at the composition the switch would create, weighted by
    how often such a pair meets.  Gains whose pair weight is zero are
    never evaluated, so compositions outside the state space are never
    touched.
    """
    if state.z != params.z:
        raise ValueError(f"state population {state.z} != params population {params.z}")
    i_c, i_d, z = state.i_c, state.i_d, state.z
    i_m = i_c + i_d
    if i_m == 0:
        return InformedFlow(x_dot=0.0, y_dot=0.0)
    x = state.x
    y = state.y
    here = fitness_at(params, i_c, i_d)

    d_cd = d_dc = d_co = d_oc = d_do = d_od = None
    if 0 < x < 1:  # both member kinds present: the C<->D swaps can happen
        d_dc = fitness_at(params, i_c + 1, i_d - 1).f_c - here.f_d
        d_cd = fitness_at(params, i_c - 1, i_d + 1).f_d - here.f_c
    if x > 0:  # a cooperator can leave
        d_co = fitness_at(params, i_c - 1, i_d).f_o - here.f_c
    if x < 1:  # a defector can leave
        d_do = fitness_at(params, i_c, i_d - 1).f_o - here.f_d
    if y < 1:  # an outsider can join either way
        d_oc = fitness_at(params, i_c + 1, i_d).f_c - here.f_o
        d_od = fitness_at(params, i_c, i_d + 1).f_d - here.f_o

    def val(delta):
        return 0.0 if delta is None else delta

    x_dot = 0.5 * x * (1.0 - x) * (
        y * (val(d_dc) - val(d_cd))
        + (1.0 - y) * (val(d_oc) - val(d_co) + val(d_do) - val(d_od))
    )
    y_dot = 0.5 * y * (1.0 - y) * (
        x * (val(d_oc) - val(d_co)) + (1.0 - x) * (val(d_od) - val(d_do))
    )
    return InformedFlow(
        x_dot=x_dot,
        y_dot=y_dot,
        delta_cd=d_cd,
        delta_dc=d_dc,
        delta_co=d_co,
        delta_oc=d_oc,
        delta_do=d_do,
        delta_od=d_od,
    )
