"""Performance measures computed from a product-form context."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownRoad
from .productform import ProductFormContext, station_marginal, station_marginals


@dataclass(frozen=True, eq=False)
class PerformanceReport:
    """Steady-state measures of one solved model.

    ``problematic`` is the expected number of stations that are empty or
    full, so it ranges over ``[0, N]``; ``problematic_fraction`` divides it
    by ``N``.
    """

    problematic: float
    problematic_fraction: float
    empty_prob: np.ndarray
    full_prob: np.ndarray
    mean_station: np.ndarray
    mean_road: dict  # (i, j) -> class-summed mean
    mean_road_by_class: dict  # (i, j) -> (class 1 mean, class 2 mean)
    pi: np.ndarray
    logG: float
    marginals: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "problematic_measure_expected_count": float(self.problematic),
            "problematic_fraction": float(self.problematic_fraction),
            "empty_prob": [float(x) for x in self.empty_prob],
            "full_prob": [float(x) for x in self.full_prob],
            "mean_station": [float(x) for x in self.mean_station],
            "mean_road": {f"{i}->{j}": float(v) for (i, j), v in sorted(self.mean_road.items())},
            "mean_road_by_class": {
                f"{i}->{j}": [float(a), float(b)] for (i, j), (a, b) in sorted(self.mean_road_by_class.items())
            },
            "pi": [float(x) for x in self.pi],
            "logG": float(self.logG),
        }

    def station_csv(self) -> str:
        lines = ["station,empty_prob,full_prob,mean_bikes"]
        for i, (e, f, q) in enumerate(zip(self.empty_prob, self.full_prob, self.mean_station), start=1):
            lines.append(f"{i},{e!r},{f!r},{q!r}")
        return "\n".join(lines) + "\n"


def problematic_measure(ctx: ProductFormContext) -> float:
    marg = station_marginals(ctx)
    return float(marg[:, 0].sum() + marg[:, -1].sum())


def mean_station_queue(ctx: ProductFormContext, i: int) -> float:
    marg = station_marginal(ctx, i)
    return float(np.arange(len(marg)) @ marg)


def mean_road_by_class(ctx: ProductFormContext, i: int, j: int) -> tuple:
    try:
        a, b = ctx.layout.road_cols[(i, j)]
    except KeyError:
        raise UnknownRoad(f"no road {i}->{j}") from None
    p = ctx.probabilities
    return float(ctx.states[:, a] @ p), float(ctx.states[:, b] @ p)


def mean_road_queue(ctx: ProductFormContext, i: int, j: int) -> float:
    return sum(mean_road_by_class(ctx, i, j))


def performance_report(ctx: ProductFormContext, pi=None) -> PerformanceReport:
    model = ctx.model
    marg = station_marginals(ctx)
    by_class = {road.key: mean_road_by_class(ctx, *road.key) for road in model.roads}
    ell = float(marg[:, 0].sum() + marg[:, -1].sum())
    return PerformanceReport(
        problematic=ell,
        problematic_fraction=ell / model.N,
        empty_prob=marg[:, 0].copy(),
        full_prob=marg[:, -1].copy(),
        mean_station=marg @ np.arange(model.K + 1),
        mean_road={k: a + b for k, (a, b) in by_class.items()},
        mean_road_by_class=by_class,
        pi=marg[:, -1].copy() if pi is None else np.asarray(pi, dtype=float),
        logG=ctx.logG,
        marginals=marg,
    )
