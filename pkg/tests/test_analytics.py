import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzsim import analytics

HALF = math.sqrt(0.5)


@pytest.mark.parametrize("n,eta,a_sq,expected", [
    (4, 1.0, 0.5, 0.1875),
    (4, 0.5, 0.5, 0.10546875),
    (6, 0.5, 0.5, 972.0 / 65536.0),
])
def test_rate_spot_values(n, eta, a_sq, expected):
    assert analytics.analytic_rate(n, eta, math.sqrt(a_sq)) == pytest.approx(
        expected, abs=1e-15)


def test_pattern_probability_spot_values():
    assert analytics.pattern_probability(4, 0.5, HALF) == pytest.approx(
        0.017578125, abs=1e-15)
    assert analytics.pattern_probability(6, 0.5, HALF) == pytest.approx(
        0.0004119873046875, abs=1e-15)
    # rate is the pattern probability times the pattern count
    assert analytics.analytic_rate(4, 0.5, HALF) == pytest.approx(
        6 * 0.017578125, abs=1e-15)


def test_fidelity_spot_values():
    assert analytics.analytic_fidelity(4, 1.0, HALF) == pytest.approx(1.0)
    assert analytics.analytic_fidelity(4, 0.5, HALF) == pytest.approx(
        2.0 / 3.0, abs=1e-15)
    assert analytics.analytic_fidelity(6, 0.5, HALF) == pytest.approx(
        math.sqrt(0.125 / 0.421875), abs=1e-15)


def test_degenerate_inputs():
    assert analytics.analytic_rate(4, 0.0, HALF) == 0.0
    assert analytics.analytic_rate(4, 0.5, 1.0) == 0.0
    assert analytics.analytic_fidelity(4, 0.5, 0.0) == 0.0
    with pytest.raises(ValueError, match="never succeeds"):
        analytics.analytic_fidelity(4, 1.0, 0.0)
    for bad in [(5, 0.5, HALF), (2, 0.5, HALF), (4, 1.5, HALF),
                (4, 0.5, 1.5)]:
        with pytest.raises(ValueError):
            analytics.analytic_rate(*bad)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([4, 6, 8, 10]), st.floats(0.001, 1.0),
       st.floats(0.01, 0.999))
def test_inversion_roundtrip(n, eta, fidelity):
    a_sq = analytics.vacuum_weight_for_fidelity(n, eta, fidelity)
    assert 0.0 <= a_sq <= 1.0
    if eta == 1.0:
        assert a_sq == 0.0
        return
    assert analytics.analytic_fidelity(n, eta, math.sqrt(a_sq)) == \
        pytest.approx(fidelity, abs=1e-12)


def test_inversion_rejects_out_of_range():
    with pytest.raises(ValueError):
        analytics.vacuum_weight_for_fidelity(4, 0.5, 0.0)
    with pytest.raises(ValueError):
        analytics.vacuum_weight_for_fidelity(4, 0.5, 1.2)
    with pytest.raises(ValueError):
        analytics.vacuum_weight_for_fidelity(3, 0.5, 0.9)


def test_direct_transmission():
    assert analytics.direct_transmission_rate(4, 0.5) == pytest.approx(
        0.0625, abs=1e-15)
    assert analytics.direct_transmission_rate(4, 0.0) == 0.0
    with pytest.raises(ValueError):
        analytics.direct_transmission_rate(1, 0.5)


def test_rate_breakdown_matches_closed_forms():
    for n, eta, a_sq in [(4, 0.5, 0.5), (6, 0.7, 0.3), (8, 0.2, 0.6)]:
        br = analytics.rate_breakdown(n, eta, math.sqrt(a_sq))
        assert br.pattern_prob == pytest.approx(
            analytics.pattern_probability(n, eta, math.sqrt(a_sq)), abs=1e-15)
        assert br.total_rate == pytest.approx(
            analytics.analytic_rate(n, eta, math.sqrt(a_sq)), abs=1e-15)
        assert br.fidelity == pytest.approx(
            analytics.analytic_fidelity(n, eta, math.sqrt(a_sq)), abs=1e-13)
        assert len(br.terms) == n // 2 + 1
        assert all(t.weighted >= 0.0 for t in br.terms)


def test_loglog_slope_recovers_power_laws():
    xs = np.geomspace(1e-4, 1e-3, 9)
    assert analytics.loglog_slope(xs, xs ** 3) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        analytics.loglog_slope([1.0], [2.0])


@pytest.mark.parametrize("n", [4, 6, 8])
def test_low_loss_scaling_exponents(n):
    etas = np.geomspace(1e-4, 1e-3, 9)
    protocol_rates = [analytics.analytic_rate(n, e, HALF) for e in etas]
    assert analytics.loglog_slope(etas, protocol_rates) == pytest.approx(
        n / 2.0, abs=0.05)
    direct = [analytics.direct_transmission_rate(n, e) for e in etas]
    assert analytics.loglog_slope(etas, direct) == pytest.approx(n, abs=0.05)


def test_crossover_for_four_users_at_high_fidelity():
    km = analytics.crossover_distance(4, 0.9)
    assert 25.0 < km < 45.0

    def ratio(distance):
        eta = 10.0 ** (-0.02 * distance)
        a_sq = analytics.vacuum_weight_for_fidelity(4, eta, 0.9)
        return (analytics.analytic_rate(4, eta, math.sqrt(a_sq))
                / analytics.direct_transmission_rate(4, eta))

    assert ratio(km - 1.0) < 1.0
    assert ratio(km + 1.0) > 1.0
    # once ahead, the advantage keeps growing with distance
    samples = [ratio(km + d) for d in range(1, 120, 10)]
    assert all(x < y for x, y in zip(samples, samples[1:]))


def test_crossover_can_be_absent():
    with pytest.raises(ValueError, match="no crossover"):
        analytics.crossover_distance(4, 0.9, max_km=10.0)
