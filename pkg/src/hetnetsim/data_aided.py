"""Data-aided MMSE channel estimation at the macro BS.

Decoded uplink payloads act as extra quasi-pilots: the joint training+data
observation is combined with a BER-aware MMSE filter whose error model
shrinks each decoded row by (1 - 2 BER) and adds a residual-interference
diagonal on the data block.  The wide solve collapses to a K x K system
through the Woodbury identity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .estimators import ChannelEstimate, EstMethod, mmse_estimate_matrix
from .phy import Observation, Phase, PilotMatrix

NMSE_FLOOR_DB = -200.0


class BerSource(str, enum.Enum):
    ANALYTIC_PROP1 = "analytic"
    EMPIRICAL_ORACLE = "empirical"
    ZERO_ERROR = "zero_error"          # oracle mode: decoded data taken error-free


@dataclass(frozen=True)
class DecodedSideInfo:
    """What the serving BSs forward over backhaul: decoded symbols plus a
    per-UE BER figure describing how much to trust them."""

    x_hat: np.ndarray                  # (K, tau_d) decoded symbols
    ber: np.ndarray                    # (K,) in [0, 0.5]
    source: BerSource
    power: float                       # nominal symbol power P_D


@dataclass(frozen=True)
class ErrorExpectation:
    e_mean: np.ndarray                 # (tau_t + tau_d,) E[e_k]
    delta_s: float                     # residual interference power from errors


@dataclass(frozen=True)
class NmsePrediction:
    kind: EstMethod
    rho: float                         # SNR-like term multiplying beta
    value_db: float


def fold_ber(ber) -> np.ndarray:
    """Fold sign-ambiguous BER reports into [0, 0.5]."""
    b = np.asarray(ber, dtype=float)
    return np.clip(np.minimum(b, 1.0 - b), 0.0, 0.5)


def delta_s_x(bers, betas, p_d: float) -> float:
    """Residual interference injected by decoding errors, P_D-weighted."""
    bers = fold_ber(bers)
    betas = np.asarray(betas, dtype=float)
    return float(p_d * np.sum(betas * (1.0 - (1.0 - 2.0 * bers) ** 2)))


def error_expectation(
    bers, betas, tau_t: int, tau_d: int, p_d: float, k: int
) -> ErrorExpectation:
    """Error-model statistics for UE k's joint row: pilots are exact (ones),
    each decoded symbol shrinks by 1 - 2 BER_k."""
    bers = fold_ber(bers)
    e = np.concatenate([np.ones(tau_t), np.full(tau_d, 1.0 - 2.0 * bers[k])])
    return ErrorExpectation(e_mean=e, delta_s=delta_s_x(bers, betas, p_d))


def da_combiner_matrix(
    pilots: PilotMatrix, side: DecodedSideInfo, betas, noise_power: float
) -> np.ndarray:
    """Columns are the per-UE combiners applied to the joint observation.

    Solved in the K x K Woodbury form: with D the diagonal regulariser
    (N0 on pilots, Delta_S + N0 on data) and Wbar the shrunk joint rows,
    C = D^-1 Wbar^H (diag(1/beta) + Wbar D^-1 Wbar^H)^-1.
    """
    betas = np.asarray(betas, dtype=float)
    bers = fold_ber(side.ber)
    tau_t = pilots.tau_t
    tau_d = side.x_hat.shape[1]
    shrink = (1.0 - 2.0 * bers)[:, None]
    w_bar = np.concatenate([pilots.s, side.x_hat * shrink], axis=1)
    ds = delta_s_x(bers, betas, side.power)
    d_inv = np.concatenate(
        [np.full(tau_t, 1.0 / noise_power), np.full(tau_d, 1.0 / (ds + noise_power))]
    )
    a = (w_bar * d_inv[None, :]) @ w_bar.conj().T
    middle = np.linalg.solve(np.diag(1.0 / betas) + a, np.eye(len(betas)))
    return (d_inv[:, None] * w_bar.conj().T) @ middle


def da_estimate_matrix(
    joint_obs: Observation,
    pilots: PilotMatrix,
    side: DecodedSideInfo,
    betas,
    noise_power: float,
) -> np.ndarray:
    """Data-aided estimates of every UE's channel to this BS (one column each)."""
    if joint_obs.phase is not Phase.JOINT:
        raise ValueError("data-aided estimation needs the joint observation")
    tau_d = side.x_hat.shape[1]
    expected_cols = pilots.tau_t + tau_d
    if joint_obs.y.shape[1] != expected_cols:
        raise ValueError(
            f"joint observation has {joint_obs.y.shape[1]} columns, "
            f"expected tau_t + tau_d = {expected_cols}"
        )
    if tau_d == 0:
        # no data columns: the scheme is exactly the pilot-only MMSE estimator
        train = Observation(y=joint_obs.y, phase=Phase.TRAINING,
                            noise_power=joint_obs.noise_power)
        return mmse_estimate_matrix(train, pilots, betas, noise_power)
    c = da_combiner_matrix(pilots, side, betas, noise_power)
    return joint_obs.y @ c


def da_estimate(
    joint_obs: Observation,
    pilots: PilotMatrix,
    side: DecodedSideInfo,
    betas,
    noise_power: float,
    k: int,
) -> ChannelEstimate:
    betas = np.asarray(betas, dtype=float)
    if not 0 <= k < len(betas):
        raise IndexError(f"UE index {k} out of range")
    estimates = da_estimate_matrix(joint_obs, pilots, side, betas, noise_power)
    return ChannelEstimate(
        g_hat=estimates[:, k], method=EstMethod.DATA_AIDED, target_beta=float(betas[k])
    )


def rho_data_aided(
    bers, betas, p_t: float, p_d: float, tau_t: int, tau_d: int,
    noise_power: float, k: int,
) -> float:
    """SNR-like term of the DA estimator: the pilot term plus the decoded-data
    increment discounted by the BER shrinkage and residual interference."""
    bers = fold_ber(bers)
    ds = delta_s_x(bers, betas, p_d)
    increment = tau_d * p_d * (1.0 - 2.0 * bers[k]) ** 2 / (ds + noise_power)
    return tau_t * p_t / noise_power + increment


def analytic_nmse_da(
    beta_k: float, betas, bers, p_t: float, p_d: float,
    tau_t: int, tau_d: int, noise_power: float, k: int,
) -> NmsePrediction:
    rho = rho_data_aided(bers, betas, p_t, p_d, tau_t, tau_d, noise_power, k)
    return NmsePrediction(
        kind=EstMethod.DATA_AIDED,
        rho=rho,
        value_db=10.0 * math.log10(1.0 / (1.0 + rho * beta_k)),
    )


def da_power_floor(tau_d: int, bers, betas, k: int) -> float:
    """Limit of the DA increment as the data power grows without bound.

    With every BER at zero there is no floor; that case returns inf.
    """
    bers = fold_ber(bers)
    betas = np.asarray(betas, dtype=float)
    denom = float(np.sum(betas * (1.0 - (1.0 - 2.0 * bers) ** 2)))
    if denom == 0.0:
        return math.inf
    return tau_d * (1.0 - 2.0 * bers[k]) ** 2 / denom


def empirical_nmse(truth, estimates, floor_db: float = NMSE_FLOOR_DB) -> float:
    """Eq.-(18)-style NMSE in dB over paired (true, estimated) vectors.

    Numerator and denominator expectations are taken before the log; exact
    recoveries report ``floor_db`` instead of -inf.
    """
    err = 0.0
    power = 0.0
    count = 0
    for g, est in zip(truth, estimates, strict=True):
        g = np.asarray(g)
        g_hat = np.asarray(getattr(est, "g_hat", est))
        err += float(np.sum(np.abs(g - g_hat) ** 2))
        power += float(np.sum(np.abs(g) ** 2))
        count += 1
    if count == 0:
        raise ValueError("empirical_nmse needs at least one sample")
    if power == 0.0:
        raise ValueError("true channels have zero norm")
    if err == 0.0:
        return floor_db
    return max(10.0 * math.log10(err / power), floor_db)
