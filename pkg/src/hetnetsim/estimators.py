"""Pilot-only LS and MMSE channel estimators with their closed-form NMSE."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .phy import Observation, Phase, PilotMatrix


class EstMethod(str, enum.Enum):
    LS = "ls"
    MMSE = "mmse"
    DATA_AIDED = "da"


@dataclass(frozen=True)
class ChannelEstimate:
    g_hat: np.ndarray
    method: EstMethod
    target_beta: Optional[float] = None


@dataclass(frozen=True)
class EstimateStats:
    """Per-element variances of the MMSE estimate and of its error.

    The two always sum to the channel gain beta (MMSE orthogonality).
    """

    estimate_var: float
    error_var: float


def _require_training(obs: Observation):
    if obs.phase is not Phase.TRAINING:
        raise ValueError("pilot-only estimators need a training-phase observation")


def ls_estimate_matrix(obs: Observation, pilots: PilotMatrix) -> np.ndarray:
    """LS estimates of all UEs at once, one column per UE."""
    _require_training(obs)
    return (obs.y @ pilots.s.conj().T) / (pilots.tau_t * pilots.power)


def mmse_estimate_matrix(
    obs: Observation, pilots: PilotMatrix, betas, noise_power: float
) -> np.ndarray:
    """Per-UE MMSE estimates for orthogonal pilots: a scalar shrinkage
    beta/(N0 + beta*tau_t*P_T) applied to the despread observation."""
    _require_training(obs)
    betas = np.asarray(betas, dtype=float)
    despread = obs.y @ pilots.s.conj().T          # tau_t*P_T*g_k + N s_k^H per column
    shrink = betas / (noise_power + betas * pilots.power * pilots.tau_t)
    return despread * shrink[None, :]


def ls_estimate(obs: Observation, pilots: PilotMatrix, k: int) -> ChannelEstimate:
    if not 0 <= k < pilots.s.shape[0]:
        raise IndexError(f"UE index {k} out of range")
    g = ls_estimate_matrix(obs, pilots)[:, k]
    return ChannelEstimate(g_hat=g, method=EstMethod.LS)


def mmse_estimate(
    obs: Observation, pilots: PilotMatrix, betas, noise_power: float
) -> list[ChannelEstimate]:
    betas = np.asarray(betas, dtype=float)
    if len(betas) != pilots.s.shape[0]:
        raise ValueError("betas length must match the pilot count")
    g = mmse_estimate_matrix(obs, pilots, betas, noise_power)
    return [
        ChannelEstimate(g_hat=g[:, k], method=EstMethod.MMSE, target_beta=float(betas[k]))
        for k in range(len(betas))
    ]


def mmse_error_stats(beta: float, p_t: float, tau_t: int, noise_power: float) -> EstimateStats:
    energy = beta * p_t * tau_t
    denom = noise_power + energy
    if denom == 0.0:
        # no pilot energy and no noise: degenerate, estimate is exactly zero
        return EstimateStats(estimate_var=0.0, error_var=float(beta))
    return EstimateStats(
        estimate_var=beta * energy / denom,
        error_var=noise_power * beta / denom,
    )


def analytic_nmse_pilot_only(
    kind: EstMethod, beta: float, p_t: float, tau_t: int, noise_power: float
) -> float:
    """Closed-form NMSE in dB; rho = tau_t*P_T/N0 is the SNR-like term."""
    rho = tau_t * p_t / noise_power
    kind = EstMethod(kind)
    if kind is EstMethod.LS:
        return 10.0 * math.log10(1.0 / (rho * beta))
    if kind is EstMethod.MMSE:
        return 10.0 * math.log10(1.0 / (1.0 + rho * beta))
    raise ValueError(f"no pilot-only closed form for {kind}")
