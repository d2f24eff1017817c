"""Cross-checks between the sparse pipeline and the dense-matrix oracle.

The oracle builds the whole network as one pure state (environment modes
included) with dense two-mode Fock unitaries from the matrix exponential, so
any agreement below is between two genuinely different code paths.
"""

import math

import numpy as np
import pytest

from ghzsim import optics, oracle, protocol
from ghzsim.channels import DetectorModel
from ghzsim.protocol import ProtocolConfig
from ghzsim.sources import BellSource, SpdcSource

HALF = math.sqrt(0.5)


def config(n, eta, a_sq, **kw):
    distance = -50.0 * math.log10(eta) if eta < 1.0 else 0.0
    return ProtocolConfig(n_users=n, source=BellSource(math.sqrt(a_sq)),
                          distance_km=distance, **kw)


def test_fock_beamsplitter_single_photon_block():
    dense = oracle._hbs_fock_matrix(1)
    u = optics.hbs().matrix
    dim = 2
    # occupation (n1, n2) lives at flat index n1 * dim + n2
    one_photon = [(1, 0), (0, 1)]
    for col, occ_in in enumerate(one_photon):
        for row, occ_out in enumerate(one_photon):
            got = dense[occ_out[0] * dim + occ_out[1],
                        occ_in[0] * dim + occ_in[1]]
            assert got == pytest.approx(u[row, col], abs=1e-12)


def test_fock_matrices_are_unitary():
    for cutoff in (1, 2, 3):
        m = oracle._hbs_fock_matrix(cutoff)
        assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)


def test_conditional_spot_values():
    prob, fid = oracle.brute_force_conditional(config(4, 1.0, 0.5),
                                               (1, 1, 0, 0))
    assert prob == pytest.approx(1.0 / 32.0, abs=1e-12)
    assert fid == pytest.approx(1.0, abs=1e-12)

    prob, fid = oracle.brute_force_conditional(config(4, 0.5, 0.5),
                                               (1, 1, 0, 0))
    assert prob == pytest.approx(0.017578125, abs=1e-12)
    assert fid == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_non_heralding_pattern_reports_probability_only():
    prob, fid = oracle.brute_force_conditional(config(4, 0.5, 0.5),
                                               (1, 1, 1, 1))
    assert fid is None
    assert prob > 0.0
    with pytest.raises(ValueError, match="pattern length"):
        oracle.brute_force_conditional(config(4, 0.5, 0.5), (1, 1, 0, 0, 0))


@pytest.mark.parametrize("eta", [0.3, 0.7, 1.0])
@pytest.mark.parametrize("a_sq", [0.3, 0.7])
def test_four_user_grid_agreement(eta, a_sq):
    cfg = config(4, eta, a_sq)
    pipeline = protocol.run_attempt(cfg, (1, 0, 0, 1))
    prob, fid = oracle.brute_force_conditional(cfg, (1, 0, 0, 1))
    assert pipeline.probability == pytest.approx(prob, abs=1e-10)
    assert pipeline.fidelity == pytest.approx(fid, abs=1e-10)


def test_six_user_agreement():
    cfg = config(6, 0.5, 0.5)
    pattern = (1, 0, 1, 0, 0, 1, 1, 0)
    pipeline = protocol.run_attempt(cfg, pattern)
    prob, fid = oracle.brute_force_conditional(cfg, pattern)
    assert pipeline.probability == pytest.approx(prob, abs=1e-10)
    assert pipeline.fidelity == pytest.approx(fid, abs=1e-10)


def test_five_user_agreement_with_lossy_threshold_detectors():
    cfg = config(5, 0.6, 0.4,
                 detector=DetectorModel.threshold(efficiency=0.9,
                                                  dark_prob=1e-4))
    pattern = (1, 1, 0, 0, 1, 1, 0, 0)
    pipeline = protocol.run_attempt(cfg, pattern)
    prob, fid = oracle.brute_force_conditional(cfg, pattern)
    assert pipeline.probability == pytest.approx(prob, abs=1e-10)
    assert pipeline.fidelity == pytest.approx(fid, abs=1e-10)


def test_oracle_scope_limits():
    with pytest.raises(ValueError, match="too large"):
        oracle.brute_force_conditional(config(10, 0.5, 0.5), (1,) * 16)
    spdc = ProtocolConfig(n_users=4, source=SpdcSource(lam=0.1))
    with pytest.raises(NotImplementedError):
        oracle.brute_force_conditional(spdc, (1, 1, 0, 0))
    with pytest.raises(NotImplementedError):
        oracle.monte_carlo_rate(spdc, 10, seed=1)


@pytest.mark.slow
def test_agreement_on_the_full_grid():
    """Probability and fidelity agree at every grid point used to certify
    the closed forms, not just at spot values."""
    worst = 0.0
    for n in (4, 6):
        pattern = protocol.enumerate_success_patterns(n)[0]
        for eta in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
            for a_sq in (0.1, 0.3, 0.5, 0.7, 0.9):
                cfg = config(n, eta, a_sq)
                res = protocol.run_attempt(cfg, pattern)
                prob, fid = oracle.brute_force_conditional(cfg, pattern)
                worst = max(worst, abs(prob - res.probability),
                            abs(fid - res.fidelity))
    assert worst <= 1e-10


def test_monte_carlo_is_reproducible():
    cfg = config(4, 0.5, 0.5)
    first = oracle.monte_carlo_rate(cfg, 2000, seed=7)
    second = oracle.monte_carlo_rate(cfg, 2000, seed=7)
    assert first == second
    with pytest.raises(ValueError):
        oracle.monte_carlo_rate(cfg, 0, seed=7)


def test_monte_carlo_matches_closed_form():
    cfg = config(4, 0.5, 0.5)
    estimate, stderr = oracle.monte_carlo_rate(cfg, 40000, seed=20260814)
    assert stderr < 0.01
    assert abs(estimate - 0.10546875) < 4.0 * stderr
