"""Damped Picard iteration for the full-station probabilities.

The map ``F`` sends a vector of full-station probabilities to the full-station
marginals of the product-form distribution built at that vector; a solution
is a point with ``F(pi) = pi``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NoConvergence, ReducibleMatrix
from .pathgraph import build_path_graph, is_irreducible
from .productform import StateSpaceTerms, build_context, station_marginals

log = logging.getLogger(__name__)

CLAMP = 1e-9


@dataclass(frozen=True)
class FixedPointConfig:
    tol: float = 1e-8
    damping: float = 0.5
    max_iter: int = 500
    init: Optional[Sequence[float]] = None  # defaults to 0.1 everywhere
    convention: str = "paper"
    max_states: Optional[int] = None
    min_damping: float = 1.0 / 1024

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.init is not None and not all(0 < x < 1 for x in self.init):
            raise ValueError("initial pi must lie strictly inside (0, 1)")


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    pi: np.ndarray
    residual: float
    iterations: int
    trace: tuple = field(repr=False)
    converged: bool = True
    context: object = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "pi": [float(x) for x in self.pi],
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


def _clamp(pi):
    return np.clip(pi, CLAMP, 1.0 - CLAMP)


def _require_irreducible(model):
    if not is_irreducible(build_path_graph(model)):
        raise ReducibleMatrix("path graph is not strongly connected")


def evaluate_map(model, pi, convention="paper", terms: Optional[StateSpaceTerms] = None,
                 max_states=None) -> np.ndarray:
    """Full-station marginals of the product form built at ``pi``."""
    ctx = build_context(model, _clamp(np.asarray(pi, dtype=float)), convention,
                        terms=terms, max_states=max_states)
    return station_marginals(ctx)[:, model.K]


def solve_fixed_point(model, cfg: FixedPointConfig = FixedPointConfig(),
                      terms: Optional[StateSpaceTerms] = None) -> FixedPointResult:
    """Iterate ``pi <- (1 - d) pi + d F(pi)`` until ``max|pi - F(pi)| <= tol``.

    The step ``d`` is halved whenever the residual grows. Raises
    :class:`NoConvergence` (carrying the best iterate) after ``max_iter``
    evaluations of ``F``.
    """
    _require_irreducible(model)
    if terms is None:
        terms = StateSpaceTerms.build(model, cfg.max_states)
    init = np.full(model.N, 0.1) if cfg.init is None else np.asarray(cfg.init, dtype=float)
    pi = _clamp(init.copy())
    damping = cfg.damping
    trace = []
    best = (np.inf, pi, None)
    for it in range(1, cfg.max_iter + 1):
        ctx = build_context(model, pi, cfg.convention, terms=terms)
        image = station_marginals(ctx)[:, model.K]
        residual = float(np.abs(image - pi).max())
        trace.append(residual)
        if residual < best[0]:
            best = (residual, pi, ctx)
        if residual <= cfg.tol:
            return FixedPointResult(pi, residual, it, tuple(trace), True, ctx)
        if len(trace) > 1 and residual > trace[-2] and damping > cfg.min_damping:
            damping /= 2
            log.debug("residual grew to %.3e at iteration %d; damping now %g", residual, it, damping)
        pi = _clamp((1 - damping) * pi + damping * image)
    residual, pi, ctx = best
    raise NoConvergence(FixedPointResult(pi, residual, cfg.max_iter, tuple(trace), False, ctx))


def find_fixed_points(model, starts, cfg: FixedPointConfig = FixedPointConfig(),
                      merge_tol: float = 1e-6) -> list:
    """Solve from each start and return the distinct fixed points found."""
    terms = StateSpaceTerms.build(model, cfg.max_states)
    found = []
    for start in starts:
        res = solve_fixed_point(model, _with_init(cfg, start), terms)
        if not any(np.abs(res.pi - f.pi).max() <= merge_tol for f in found):
            found.append(res)
    return found


def _with_init(cfg, init):
    from dataclasses import replace

    return replace(cfg, init=tuple(float(x) for x in init))
