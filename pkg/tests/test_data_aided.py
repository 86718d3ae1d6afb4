import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnetsim import phy
from hetnetsim.data_aided import (
    BerSource,
    DecodedSideInfo,
    analytic_nmse_da,
    da_combiner_matrix,
    da_estimate,
    da_estimate_matrix,
    da_power_floor,
    empirical_nmse,
    error_expectation,
    fold_ber,
    rho_data_aided,
)
from hetnetsim.detectors import Modulation, modulate, random_bits
from hetnetsim.estimators import EstMethod, mmse_estimate_matrix
from hetnetsim.phy import Observation, Phase, joint_observation, make_pilots, observe


def _setup(k=2, m=4, tau_t=2, tau_d=8, betas=(1.0, 0.4), n0=0.2,
           p_t=1.5, p_d=2.0, bers=(0.1, 0.05), seed=0):
    rng = np.random.default_rng(seed)
    betas = np.asarray(betas, dtype=float)
    h = phy.complex_gaussian(rng, (m, k)) * np.sqrt(betas)[None, :]
    pilots = make_pilots(k, tau_t, p_t)
    bits = random_bits(k, tau_d, Modulation.BPSK, rng)
    block = modulate(bits, Modulation.BPSK, p_d)
    train = observe(h, pilots.s, n0, rng, Phase.TRAINING)
    data = observe(h, block.symbols, n0, rng, Phase.DATA)
    joint = joint_observation(train, data)
    side = DecodedSideInfo(x_hat=block.symbols, ber=np.asarray(bers, dtype=float),
                           source=BerSource.EMPIRICAL_ORACLE, power=p_d)
    return h, pilots, block, train, joint, side, betas, n0


def test_fold_ber():
    assert np.allclose(fold_ber([0.0, 0.3, 0.5, 0.7, 1.0]), [0.0, 0.3, 0.5, 0.3, 0.0])


def test_error_expectation_zero_ber():
    exp = error_expectation([0.0, 0.0], [1.0, 2.0], 3, 4, 1.0, 0)
    assert np.array_equal(exp.e_mean, np.ones(7))
    assert exp.delta_s == 0.0


def test_error_expectation_half_ber():
    betas = [1.0, 2.0]
    exp = error_expectation([0.5, 0.5], betas, 2, 3, 1.5, 1)
    assert np.array_equal(exp.e_mean[:2], [1.0, 1.0])
    assert np.array_equal(exp.e_mean[2:], [0.0, 0.0, 0.0])
    assert exp.delta_s == pytest.approx(1.5 * 3.0)


def test_error_expectation_arithmetic():
    exp = error_expectation([0.1], [1.0], 2, 4, 1.0, 0)
    assert np.allclose(exp.e_mean[2:], 0.8)
    assert exp.delta_s == pytest.approx(1.0 - 0.64)


def _assemble_direct_combiner(pilots, side, betas, n0):
    """Covariance-assembly oracle: build P entry by entry from the error
    statistics (E|e|^2 = 1 on the diagonal, independent means elsewhere)
    and solve the full (tau_t + tau_d) system."""
    betas = np.asarray(betas, dtype=float)
    k_total = len(betas)
    tau_t, tau_d = pilots.tau_t, side.x_hat.shape[1]
    tau = tau_t + tau_d
    w_hat = np.concatenate([pilots.s, side.x_hat], axis=1)
    e_mean = np.concatenate(
        [np.ones((k_total, tau_t)),
         np.tile((1.0 - 2.0 * fold_ber(side.ber))[:, None], (1, tau_d))], axis=1)
    p = np.zeros((tau, tau), dtype=complex)
    for i in range(tau):
        for j in range(tau):
            for k in range(k_total):
                moment = 1.0 if i == j else e_mean[k, i] * e_mean[k, j]
                p[i, j] += betas[k] * np.conj(w_hat[k, i]) * w_hat[k, j] * moment
    rhs = (w_hat.conj() * e_mean).T * betas[None, :]
    return np.linalg.solve(p + n0 * np.eye(tau), rhs)


def test_da_combiner_matches_covariance_assembly_oracle():
    _, pilots, _, _, joint, side, betas, n0 = _setup()
    fast = da_combiner_matrix(pilots, side, betas, n0)
    slow = _assemble_direct_combiner(pilots, side, betas, n0)
    assert np.allclose(fast, slow, rtol=1e-9, atol=1e-12)


def test_da_estimate_toy_instance_matches_oracle():
    h, pilots, _, _, joint, side, betas, n0 = _setup(seed=3)
    oracle = joint.y @ _assemble_direct_combiner(pilots, side, betas, n0)
    fast = da_estimate_matrix(joint, pilots, side, betas, n0)
    assert np.allclose(fast, oracle, rtol=1e-9)
    est = da_estimate(joint, pilots, side, betas, n0, 1)
    assert est.method is EstMethod.DATA_AIDED
    assert np.allclose(est.g_hat, oracle[:, 1], rtol=1e-9)


def test_woodbury_equals_direct_solve_on_random_instances():
    rng = np.random.default_rng(9)
    for trial in range(5):
        k = int(rng.integers(1, 5))
        tau_t = k + int(rng.integers(0, 4))
        _, pilots, _, _, joint, side, betas, n0 = _setup(
            k=k, m=3, tau_t=tau_t, tau_d=int(rng.integers(1, 12)),
            betas=tuple(rng.uniform(0.1, 2.0, size=k)),
            bers=tuple(rng.uniform(0.0, 0.5, size=k)),
            n0=float(rng.uniform(0.01, 1.0)), seed=100 + trial)
        fast = da_combiner_matrix(pilots, side, betas, n0)
        slow = _assemble_direct_combiner(pilots, side, betas, n0)
        assert np.allclose(fast, slow, rtol=1e-9, atol=1e-12)


def test_da_without_data_reduces_to_pilot_only():
    h, pilots, _, train, _, _, betas, n0 = _setup(tau_d=0)
    side = DecodedSideInfo(x_hat=np.zeros((2, 0)), ber=np.zeros(2),
                           source=BerSource.EMPIRICAL_ORACLE, power=2.0)
    joint = Observation(y=train.y, phase=Phase.JOINT, noise_power=n0)
    da = da_estimate_matrix(joint, pilots, side, betas, n0)
    po = mmse_estimate_matrix(train, pilots, betas, n0)
    assert np.array_equal(da, po)


def test_da_with_half_ber_degrades_to_pilot_only():
    h, pilots, _, train, joint, side, betas, n0 = _setup(seed=5)
    side_half = DecodedSideInfo(x_hat=side.x_hat, ber=np.full(2, 0.5),
                                source=side.source, power=side.power)
    da = da_estimate_matrix(joint, pilots, side_half, betas, n0)
    po = mmse_estimate_matrix(train, pilots, betas, n0)
    assert np.linalg.norm(da - po) / np.linalg.norm(po) < 1e-9


def test_da_rejects_bad_joint_shape():
    _, pilots, _, train, joint, side, betas, n0 = _setup()
    bad = Observation(y=joint.y[:, :-1], phase=Phase.JOINT, noise_power=n0)
    with pytest.raises(ValueError, match="columns"):
        da_estimate_matrix(bad, pilots, side, betas, n0)
    with pytest.raises(ValueError, match="joint"):
        da_estimate_matrix(train, pilots, side, betas, n0)


def test_rho_da_zero_ber_is_total_energy():
    rho = rho_data_aided(np.zeros(3), [1e-9, 2e-9, 3e-10], 2.0, 200.0, 30, 128, 8e-11, 0)
    assert rho == 30 * 2.0 / 8e-11 + 128 * 200.0 / 8e-11


def test_rho_da_half_ber_is_pilot_term():
    rho = rho_data_aided(np.full(2, 0.5), [1e-9, 1e-9], 2.0, 200.0, 30, 128, 8e-11, 0)
    assert rho == pytest.approx(30 * 2.0 / 8e-11)


@given(
    ber=st.floats(0.0, 0.5),
    other=st.floats(0.0, 0.5),
    p_d=st.floats(1e-3, 1e4),
    tau_d=st.integers(0, 1024),
)
def test_rho_da_never_below_pilot_only(ber, other, p_d, tau_d):
    betas = [1e-9, 5e-10]
    rho = rho_data_aided([ber, other], betas, 2.0, p_d, 30, tau_d, 8e-11, 0)
    assert rho >= 30 * 2.0 / 8e-11 - 1e-6


def test_rho_da_monotonicity():
    betas = [1e-9, 5e-10]
    args = dict(betas=betas, p_t=2.0, p_d=200.0, tau_t=30, tau_d=128,
                noise_power=8e-11, k=0)
    base = rho_data_aided([0.1, 0.1], **args)
    assert rho_data_aided([0.05, 0.1], **args) > base          # own BER down
    assert rho_data_aided([0.1, 0.1], **{**args, "p_t": 4.0}) > base
    assert rho_data_aided([0.1, 0.1], **{**args, "tau_d": 256}) > base
    assert rho_data_aided([0.1, 0.1], **{**args, "tau_t": 60}) > base


def test_analytic_nmse_da_prediction_fields():
    pred = analytic_nmse_da(1e-9, [1e-9], [0.0], 2.0, 200.0, 30, 128, 8e-11, 0)
    assert pred.kind is EstMethod.DATA_AIDED
    assert pred.value_db == pytest.approx(
        10 * math.log10(1 / (1 + pred.rho * 1e-9)))


def test_power_floor_arithmetic():
    # single UE: tau_d (1-2b)^2 / (beta (1-(1-2b)^2))
    floor = da_power_floor(128, [0.1], [1.0], 0)
    assert floor == pytest.approx(128 * 0.64 / 0.36, rel=1e-12)


def test_power_floor_no_errors_signals_unbounded():
    assert math.isinf(da_power_floor(128, [0.0, 0.0], [1.0, 2.0], 0))


def test_power_floor_is_rho_increment_limit():
    betas = np.array([1e-9, 4e-10, 2e-10])
    bers = np.array([0.02, 0.003, 0.2])
    n0, p_t, tau_t, tau_d = 8e-11, 2.0, 30, 128
    floor = da_power_floor(tau_d, bers, betas, 0)
    increment = rho_data_aided(bers, betas, p_t, 1e6, tau_t, tau_d, n0, 0) \
        - tau_t * p_t / n0
    assert increment == pytest.approx(floor, rel=1e-3)


def test_empirical_nmse_paths():
    truth = [np.array([1.0 + 0j, 2.0]), np.array([0.5 + 0j, 0.5])]
    assert empirical_nmse(truth, truth) == -200.0
    zeros = [np.zeros(2), np.zeros(2)]
    assert empirical_nmse(truth, zeros) == pytest.approx(0.0)
    with pytest.raises(ValueError, match="zero"):
        empirical_nmse(zeros, zeros)
    with pytest.raises(ValueError, match="at least one"):
        empirical_nmse([], [])


def test_empirical_nmse_tracks_ls_closed_form():
    # beta = 1, rho = tau_t P_T / N0 = 100 -> -20 dB
    rng = np.random.default_rng(11)
    pilots = make_pilots(1, 4, 25.0)
    truth, estimates = [], []
    for _ in range(800):
        g = phy.complex_gaussian(rng, (8, 1))
        obs = observe(g, pilots.s, 1.0, rng, Phase.TRAINING)
        est = obs.y @ pilots.s.conj().T / (4 * 25.0)
        truth.append(g[:, 0])
        estimates.append(est[:, 0])
    assert empirical_nmse(truth, estimates) == pytest.approx(-20.0, abs=0.2)
