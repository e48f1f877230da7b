import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wsn_tpc import channel
from wsn_tpc.channel import (
    DomainError,
    PropagationParams,
    Topology,
    build_gain_matrix,
    channel_coefficient,
    path_loss,
    psr_from_sinr,
    shadowing_mean,
    sinr,
    sinr_from_psr,
)

from conftest import psr_oracle, sinr_oracle

PARAMS = PropagationParams()


def test_path_loss_at_one_meter():
    expected = (299792458 / (4 * math.pi * 2.48e9)) ** 2
    assert path_loss(1.0, PARAMS) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(9.25e-5, rel=1e-3)
    assert 10 * math.log10(expected) == pytest.approx(-40.3, abs=0.05)


@pytest.mark.parametrize("eta", [2.0, 3.3, 4.5])
def test_path_loss_at_reference_distance_ignores_exponent(eta):
    p = PropagationParams(pathloss_exponent=eta, reference_distance=2.5)
    assert path_loss(2.5, p) == pytest.approx((p.speed_of_light / (4 * math.pi * p.frequency * 2.5)) ** 2)


def test_path_loss_doubling_distance():
    assert path_loss(20.0, PARAMS) / path_loss(10.0, PARAMS) == pytest.approx(2 ** -3.3)
    assert 2 ** -3.3 == pytest.approx(0.1015, abs=1e-4)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_non_positive_distance(d):
    with pytest.raises(DomainError):
        path_loss(d, PARAMS)


def test_shadowing_mean_values():
    assert shadowing_mean(0.0) == 1.0
    assert shadowing_mean(2 * (10 / math.log(10)) ** 2) == pytest.approx(math.e)
    var_ln = (math.log(10) / 10) ** 2 * 2.75
    assert var_ln == pytest.approx(0.1458, abs=1e-4)
    assert shadowing_mean(2.75) == pytest.approx(1.0756, abs=1e-4)
    with pytest.raises(DomainError):
        shadowing_mean(-0.1)


def test_channel_coefficient_composition():
    no_shadow = PropagationParams(shadowing_variance_db=0.0)
    assert channel_coefficient(7.0, no_shadow) == path_loss(7.0, no_shadow)
    assert channel_coefficient(10.0, PARAMS) == pytest.approx(path_loss(10.0, PARAMS) / 1.0756241513702989)


def test_channel_coefficient_clamps_below_one():
    before = channel.diagnostics.clamped_gains
    q = channel_coefficient(1e-6, PropagationParams(frequency=1e6))
    assert q < 1
    assert channel.diagnostics.clamped_gains == before + 1


@given(st.floats(0.1, 1e3), st.floats(1.001, 10.0))
def test_gain_decreases_with_distance(d, factor):
    assert path_loss(d * factor, PARAMS) < path_loss(d, PARAMS)
    assert 0 < channel_coefficient(d * factor, PARAMS) < channel_coefficient(d, PARAMS) < 1


def test_gain_matrix_single_link():
    topo = Topology([[0.0, 0.0]], [[3.0, 4.0]])
    q = build_gain_matrix(topo, PARAMS)
    assert q.shape == (1, 1)
    assert q[0, 0] == channel_coefficient(5.0, PARAMS)


def test_gain_matrix_equal_radii_symmetric():
    angles = 2 * np.pi * np.arange(3) / 3
    tx = 10 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    q = build_gain_matrix(Topology(tx, np.zeros((3, 2))), PARAMS)
    assert np.allclose(q, q[0, 0], rtol=1e-12)


def test_gain_matrix_relabeling(rng):
    tx = rng.uniform(-20, 20, (4, 2))
    rx = rng.uniform(-20, 20, (4, 2))
    perm = rng.permutation(4)
    q = build_gain_matrix(Topology(tx, rx), PARAMS)
    qp = build_gain_matrix(Topology(tx[perm], rx[perm]), PARAMS)
    assert np.array_equal(qp, q[np.ix_(perm, perm)])


def test_gain_matrix_rejects_coincident_nodes():
    with pytest.raises(DomainError):
        build_gain_matrix(Topology([[1.0, 1.0]], [[1.0, 1.0]]), PARAMS)


def test_sinr_single_link():
    assert sinr([1e-4], [[1e-8]], [1e-13], 0) == pytest.approx(10.0)


def test_sinr_zero_power():
    q = np.full((2, 2), 1e-8)
    assert sinr([0.0, 1e-3], q, 1e-13, 0) == 0.0


def test_sinr_two_equal_links():
    p, qd, qc, n = 2e-4, 4e-8, 1e-9, 1e-13
    q = np.array([[qd, qc], [qc, qd]])
    expected = 2e-4 * 4e-8 / (2e-4 * 1e-9 + 1e-13)
    assert sinr([p, p], q, [n, n], 1) == pytest.approx(expected, rel=1e-14)


@given(st.floats(1e-3, 1e3))
def test_sinr_scale_invariance(scale):
    q = np.array([[3e-8, 1e-9, 2e-9], [5e-10, 4e-8, 1e-9], [2e-9, 3e-9, 2e-8]])
    p = np.array([1e-4, 3e-4, 2e-5])
    n = np.array([1e-13, 2e-13, 1e-13])
    for l in range(3):
        assert sinr(p * scale, q, n * scale, l) == pytest.approx(sinr(p, q, n, l), rel=1e-12)


def test_psr_limits():
    assert psr_from_sinr(1e4, 120) == 1.0
    assert psr_from_sinr(0.0, 120) == pytest.approx(0.5 ** 120, rel=1e-12)
    assert 0.5 ** 120 == pytest.approx(7.52e-37, rel=1e-3)


def test_psr_matches_erfc_oracle():
    for gamma in [0.0, 0.1, 0.5, 0.886, 2.0]:
        for W in [1, 120, 1024]:
            assert psr_from_sinr(gamma, W) == pytest.approx(psr_oracle(gamma, W), rel=1e-12)


def test_sinr_for_psr_099():
    gamma = sinr_from_psr(0.99, 120)
    assert gamma == pytest.approx(sinr_oracle(0.99, 120), rel=1e-9)
    assert gamma == pytest.approx(0.886, abs=1e-3)
    assert psr_from_sinr(0.886, 120) == pytest.approx(0.99, abs=1e-3)


@pytest.mark.parametrize("kappa", [0.01, 0.5, 0.9, 0.999])
def test_round_trip_w120(kappa):
    assert abs(psr_from_sinr(sinr_from_psr(kappa, 120), 120) - kappa) <= 1e-9


def test_inverse_at_floor_is_zero():
    assert sinr_from_psr(0.5 ** 120, 120) == 0.0
    # below the floor nothing is reachable; the inverse saturates at zero
    assert sinr_from_psr(0.3, 1) == 0.0


@pytest.mark.parametrize("kappa", [0.0, 1.0, -0.2, 1.5])
def test_inverse_domain(kappa):
    with pytest.raises(DomainError):
        sinr_from_psr(kappa, 120)


@given(st.floats(0.0, 5.0), st.floats(1e-6, 1.0), st.sampled_from([1, 120, 1024]))
def test_psr_increasing(gamma, step, W):
    lo, hi = psr_from_sinr(gamma, W), psr_from_sinr(gamma + step, W)
    assert 0 <= lo <= hi <= 1
    # strictness is only observable while 1 - kappa is well above machine epsilon
    if hi < 1.0 - 1e-9:
        assert lo < hi


@given(st.floats(0.0, 1.0), st.sampled_from([1, 120, 1024]))
def test_round_trip_property(u, W):
    floor = 0.5 ** W
    kappa = max(0.01, floor + 1e-6) + u * (0.999 - max(0.01, floor + 1e-6))
    assert abs(psr_from_sinr(sinr_from_psr(kappa, W), W) - kappa) <= 1e-9


def test_dbm_conversion():
    assert channel.dbm_to_watt(7.0) == pytest.approx(5.0119e-3, rel=1e-4)
    assert channel.dbm_to_watt(-100.0) == pytest.approx(1e-13)
    assert channel.watt_to_dbm(1e-4) == pytest.approx(-10.0)
