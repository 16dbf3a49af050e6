"""Product-form stationary distribution of the closed two-class network.

Every state's unnormalised weight is a product of station factors and road
factors. Everything is evaluated in log space: for a fixed model the log
weight of a state is affine in the logs of the visit ratios, so the state
array is scored with a single matrix-vector product per ``pi`` iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .routing import RelativeArrivalRates, build_routing_matrix, solve_relative_rates
from .statespace import NetworkState, StateLayout, state_array

CONVENTIONS = ("paper", "bcmp")


def _log_station_factor(n, e, lam) -> float:
    total = sum(n)
    out = math.lgamma(total + 1)
    for k, lv in zip(n, lam):
        out += -math.lgamma(k + 1) + k * (math.log(e) - math.log(lv))
    return out


def _log_road_factor(m1, m2, e1, e2, mu, xi, convention="paper") -> float:
    if convention == "paper":
        out = math.lgamma(m1 + m2 + 1) - math.lgamma(m1 + 1) - math.lgamma(m2 + 1)
        if m1:
            out += m1 * (math.log(e1) - math.log(m1 * mu))
        if m2:
            out += m2 * (math.log(e2) - math.log(m2 * xi))
        return out
    if convention == "bcmp":
        return (
            m1 * (math.log(e1) - math.log(mu)) - math.lgamma(m1 + 1)
            + m2 * (math.log(e2) - math.log(xi)) - math.lgamma(m2 + 1)
        )
    raise ValueError(f"unknown road-factor convention {convention!r}")


def station_factor(n_i, e_i, lambda_vec) -> float:
    """Multinomial over phases times ``prod_v (e_i / lambda_v) ** n_v``."""
    return math.exp(_log_station_factor(list(n_i), float(e_i), list(lambda_vec)))


def road_factor(m1, m2, e1, e2, mu, xi, convention="paper") -> float:
    """Factor of one road node holding ``m1`` first-ride and ``m2`` retrial bikes.

    The ``paper`` convention is ``C(m1+m2, m1) (e1/(m1 mu))**m1 (e2/(m2 xi))**m2``
    with a zero-count factor equal to 1; ``bcmp`` is the infinite-server form
    ``(e1/mu)**m1/m1! * (e2/xi)**m2/m2!``.
    """
    return math.exp(_log_road_factor(int(m1), int(m2), e1, e2, mu, xi, convention))


@dataclass(frozen=True, eq=False)
class StateSpaceTerms:
    """Parts of the log weights that do not depend on the visit ratios."""

    layout: StateLayout
    states: np.ndarray
    base: dict  # convention -> per-state constant log term
    station_totals: np.ndarray  # (|states|, N)

    @classmethod
    def build(cls, model, max_states=None) -> "StateSpaceTerms":
        layout = StateLayout.of(model)
        S = state_array(model, max_states)
        X = S.astype(float)
        station_base = np.zeros(len(S))
        totals = np.empty((len(S), model.N), dtype=np.int64)
        for i, cols in enumerate(layout.station_cols, start=1):
            lam = model.phase_rates[i - 1].lambda_vec
            n = X[:, list(cols)]
            tot = n.sum(axis=1)
            totals[:, i - 1] = tot
            station_base += gammaln(tot + 1) - gammaln(n + 1).sum(axis=1) - n @ np.log(lam)
        literal = station_base.copy()
        bcmp = station_base.copy()
        for (i, j), (a, b) in layout.road_cols.items():
            road = model.road(i, j)
            m1, m2 = X[:, a], X[:, b]
            literal += gammaln(m1 + m2 + 1) - gammaln(m1 + 1) - gammaln(m2 + 1)
            literal -= xlogy(m1, m1 * road.mu) + xlogy(m2, m2 * road.xi)
            bcmp -= m1 * math.log(road.mu) + gammaln(m1 + 1) + m2 * math.log(road.xi) + gammaln(m2 + 1)
        return cls(layout, S, {"paper": literal, "bcmp": bcmp}, totals)

    def log_visit_vector(self, model, rates: RelativeArrivalRates) -> np.ndarray:
        """Per column, the log visit ratio of the node owning that coordinate."""
        out = np.empty(self.layout.width)
        for i, cols in enumerate(self.layout.station_cols, start=1):
            out[list(cols)] = math.log(rates.station(i))
        for (i, j), (a, b) in self.layout.road_cols.items():
            out[a] = math.log(rates.road(i, j, 1))
            out[b] = math.log(rates.road(i, j, 2))
        return out

    def log_weights(self, model, rates, convention="paper") -> np.ndarray:
        if convention not in CONVENTIONS:
            raise ValueError(f"unknown road-factor convention {convention!r}")
        return self.base[convention] + self.states @ self.log_visit_vector(model, rates)


@dataclass(frozen=True, eq=False)
class ProductFormContext:
    model: object
    rates: RelativeArrivalRates
    phase_rates: tuple
    logG: float
    convention: str
    terms: StateSpaceTerms = field(repr=False)
    probabilities: np.ndarray = field(repr=False)

    @property
    def states(self) -> np.ndarray:
        return self.terms.states

    @property
    def layout(self) -> StateLayout:
        return self.terms.layout


def normalization_constant(model, rates, phase_rates=None, convention="paper",
                           terms: Optional[StateSpaceTerms] = None, max_states=None) -> float:
    """Log of the sum of unnormalised weights over the whole state space."""
    if phase_rates is not None and tuple(phase_rates) != tuple(model.phase_rates):
        from dataclasses import replace

        model = replace(model, phase_rates=tuple(phase_rates))
        terms = None
    if terms is None:
        terms = StateSpaceTerms.build(model, max_states)
    return float(logsumexp(terms.log_weights(model, rates, convention)))


def build_context(model, pi=None, convention="paper", rates=None,
                  terms: Optional[StateSpaceTerms] = None, max_states=None) -> ProductFormContext:
    """Product-form distribution at full-station probabilities ``pi``.

    Pass ``rates`` instead of ``pi`` to use precomputed visit ratios, and
    ``terms`` to reuse a state space across calls.
    """
    if rates is None:
        rates = solve_relative_rates(build_routing_matrix(model, pi))
    if terms is None:
        terms = StateSpaceTerms.build(model, max_states)
    logw = terms.log_weights(model, rates, convention)
    logG = float(logsumexp(logw))
    probs = np.exp(logw - logG)
    probs.setflags(write=False)
    return ProductFormContext(model, rates, tuple(model.phase_rates), logG, convention, terms, probs)


def log_term(ctx: ProductFormContext, state: NetworkState) -> float:
    """Unnormalised log weight of one state, evaluated factor by factor."""
    model = ctx.model
    out = 0.0
    for i in range(1, model.N + 1):
        out += _log_station_factor(state.n[i - 1], ctx.rates.station(i),
                                   ctx.phase_rates[i - 1].lambda_vec)
    for (i, j), (m1, m2) in state.m:
        road = model.road(i, j)
        out += _log_road_factor(m1, m2, ctx.rates.road(i, j, 1), ctx.rates.road(i, j, 2),
                                road.mu, road.xi, ctx.convention)
    return out


def joint_probability(ctx: ProductFormContext, state: NetworkState) -> float:
    model = ctx.model
    if state.total() != model.fleet:
        return 0.0
    if any(min(n) < 0 or sum(n) > model.K for n in state.n):
        return 0.0
    if any(a < 0 or b < 0 for _, (a, b) in state.m):
        return 0.0
    return math.exp(log_term(ctx, state) - ctx.logG)


def station_marginal(ctx: ProductFormContext, i: int) -> np.ndarray:
    """Distribution of the number of bikes parked at station ``i`` over ``0..K``."""
    totals = ctx.terms.station_totals[:, i - 1]
    return np.bincount(totals, weights=ctx.probabilities, minlength=ctx.model.K + 1)


def station_marginals(ctx: ProductFormContext) -> np.ndarray:
    return np.vstack([station_marginal(ctx, i) for i in range(1, ctx.model.N + 1)])
