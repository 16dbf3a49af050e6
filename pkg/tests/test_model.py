import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bikeshare_cqn.errors import (
    CapacityError,
    DegenerateStation,
    DisconnectedStation,
    ModelError,
    RateError,
    RoutingError,
    SingularGenerator,
    ZeroPhaseRate,
)
from bikeshare_cqn.model import (
    MapDescriptor,
    StationArrivals,
    map_stationary_vector,
    phase_arrival_rates,
    validate_model,
)

from conftest import load_model, two_station

ASYM = MapDescriptor(C=[[-3, 1], [1, -4]], D=[[2, 0], [1, 2]])
SYM = MapDescriptor(C=[[-2, 1], [1, -2]], D=[[1, 0], [0, 1]])


def test_single_phase_theta():
    assert map_stationary_vector(MapDescriptor([[-3]], [[3]])).tolist() == [1.0]


def test_symmetric_theta_and_rates():
    np.testing.assert_allclose(map_stationary_vector(SYM), [0.5, 0.5], atol=1e-14)
    pr = phase_arrival_rates(SYM)
    np.testing.assert_allclose(pr.lambda_vec, [0.5, 0.5], atol=1e-14)
    assert pr.lambda_total == pytest.approx(1.0)


def test_asymmetric_theta_against_lstsq_oracle():
    theta = map_stationary_vector(ASYM)
    A = np.vstack([ASYM.generator.T, np.ones(2)])
    ref = np.linalg.lstsq(A, np.array([0.0, 0.0, 1.0]), rcond=None)[0]
    np.testing.assert_allclose(theta, [2 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(theta, ref, atol=1e-12)
    assert np.abs(theta @ ASYM.generator).max() < 1e-12


def test_asymmetric_phase_rates():
    pr = phase_arrival_rates(ASYM)
    np.testing.assert_allclose(pr.lambda_vec, [5 / 3, 2 / 3], atol=1e-12)
    assert pr.lambda_total == pytest.approx(7 / 3, abs=1e-12)


def test_zero_phase_rate():
    with pytest.raises(ZeroPhaseRate):
        phase_arrival_rates(MapDescriptor(C=[[-4, 1], [1, -5]], D=[[3, 0], [4, 0]]))


def test_reducible_generator():
    m = MapDescriptor(C=[[-1, 0], [0, -1]], D=[[1, 0], [0, 1]])
    with pytest.raises(SingularGenerator):
        map_stationary_vector(m)


def test_map_check_flags_bad_rows():
    bad = MapDescriptor(C=[[-3, 1], [1, -4]], D=[[2, 0], [1, 1]])
    assert any("sum to 0" in v for v in bad.check())
    assert ASYM.check() == []


def test_map_arrays_are_read_only():
    with pytest.raises(ValueError):
        ASYM.C[0, 0] = 1.0


@st.composite
def maps(draw):
    m = draw(st.integers(1, 4))
    rate = st.floats(0.1, 5.0)
    off = np.array([[draw(rate) if v != w else 0.0 for w in range(m)] for v in range(m)])
    D = np.array([[draw(rate) for _ in range(m)] for _ in range(m)])
    C = off - np.diag(off.sum(axis=1) + D.sum(axis=1))
    return MapDescriptor(C, D)


@settings(max_examples=60, deadline=None)
@given(maps(), st.floats(0.01, 100.0))
def test_theta_is_invariant_under_scaling(mp, c):
    theta = map_stationary_vector(mp)
    scaled = map_stationary_vector(MapDescriptor(c * mp.C, c * mp.D))
    np.testing.assert_allclose(theta, scaled, atol=1e-9)
    np.testing.assert_allclose(phase_arrival_rates(MapDescriptor(c * mp.C, c * mp.D)).lambda_vec,
                               c * phase_arrival_rates(mp).lambda_vec, rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(maps())
def test_theta_is_a_distribution(mp):
    theta = map_stationary_vector(mp)
    assert theta.min() >= 0
    assert theta.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(theta @ mp.generator).max() < 1e-9 * max(1.0, np.abs(mp.C).max())


def test_example_one_is_valid():
    model = load_model("example_one")
    assert (model.N, model.C, model.K, model.fleet) == (2, 2, 3, 4)
    assert model.theta_out(1) == [2] and model.delta_in(1) == [2]


def test_capacity_violation():
    raw = two_station().to_dict()
    raw["C"] = 3
    with pytest.raises(CapacityError):
        validate_model(raw)


def test_row_sum_violation_on_line_topology():
    raw = load_model("example_three").to_dict()
    raw["p"]["2->1"] = 0.3
    with pytest.raises(RoutingError) as info:
        validate_model(raw)
    assert any("row 2" in v for v in info.value.violations)


def test_all_violations_are_collected():
    raw = load_model("example_three").to_dict()
    raw["C"] = 5
    raw["p"]["2->1"] = 0.3
    with pytest.raises(CapacityError) as info:
        validate_model(raw)
    assert any("row 2" in v for v in info.value.violations)


def test_negative_rate():
    raw = two_station().to_dict()
    raw["roads"][0]["mu"] = -1
    with pytest.raises(RateError):
        validate_model(raw)


def test_one_way_is_disconnected():
    raw = two_station().to_dict()
    raw["roads"] = raw["roads"][:1]
    raw["p"] = {"1->2": 1}
    raw["alpha"] = {"1->2": 1}
    with pytest.raises(DisconnectedStation):
        validate_model(raw)
    assert issubclass(DisconnectedStation, DegenerateStation)


def test_single_station_rejected():
    raw = {"N": 1, "C": 1, "K": 2, "stations": [{"lambda": [1]}], "roads": [], "p": {}, "alpha": {}}
    with pytest.raises(ModelError):
        validate_model(raw)


def test_mass_on_missing_road():
    raw = two_station().to_dict()
    raw["alpha"]["1->1"] = 0.5
    with pytest.raises(ModelError):
        validate_model(raw)


def test_validate_is_idempotent():
    for name in ("example_one", "example_two", "example_three"):
        model = load_model(name)
        assert validate_model(model) == model
        assert validate_model(model.to_dict()) == model


def test_direct_lambda_must_be_positive():
    with pytest.raises(ZeroPhaseRate):
        StationArrivals(lambda_vec=[1.0, 0.0]).rates()


def test_station_needs_exactly_one_arrival_description():
    with pytest.raises(ModelError):
        StationArrivals()
