"""Closed-queueing-network analysis of bike-sharing systems with MAP arrivals."""

from .errors import (
    BikeShareError,
    CapacityError,
    ConfigError,
    DegenerateStation,
    DimensionError,
    ModelError,
    NoConvergence,
    RateError,
    ReducibleMatrix,
    RoutingError,
    SingularGenerator,
    StateSpaceTooLarge,
    UnknownRoad,
    ZeroPhaseRate,
)
from .fixedpoint import FixedPointConfig, FixedPointResult, evaluate_map, find_fixed_points, solve_fixed_point
from .measures import (
    PerformanceReport,
    mean_road_queue,
    mean_station_queue,
    performance_report,
    problematic_measure,
)
from .model import (
    BikeShareModel,
    MapDescriptor,
    PhaseRates,
    RoadSpec,
    StationArrivals,
    map_stationary_vector,
    phase_arrival_rates,
    validate_model,
)
from .pathgraph import PathGraph, build_path_graph, is_irreducible
from .productform import (
    ProductFormContext,
    build_context,
    joint_probability,
    normalization_constant,
    road_factor,
    station_factor,
    station_marginal,
)
from .routing import RelativeArrivalRates, RoutingMatrix, VirtualNode, build_routing_matrix, solve_relative_rates
from .simulator import SimConfig, SimReport, map_event_stream, simulate
from .statespace import NetworkState, enumerate_states, state_array, state_count

__version__ = "0.1.0"
