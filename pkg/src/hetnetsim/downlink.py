"""Zero-forcing downlink beamforming and the ergodic-rate metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .phy import ChannelSet
from .scenario import Association, ue_classes

UE_CLASSES = ("decoupled", "mue", "sue")


@dataclass(frozen=True)
class Precoder:
    """One BS's precoding matrix, a column per served UE, with the power
    budget split equally across columns."""

    w: np.ndarray                      # (antennas, served)
    power: float
    ue_indices: tuple


@dataclass(frozen=True)
class DownlinkRates:
    sinr: np.ndarray                   # (K,) linear SINR
    rate: np.ndarray                   # (K,) log2(1 + SINR)
    per_class: dict                    # class label -> mean rate (nan if empty)


def zf_precode(estimates: np.ndarray, power: float, ue_indices=None) -> Precoder:
    """ZF beamformer from estimated channels: pseudo-inverse directions,
    columns rescaled to power/served."""
    est = np.asarray(estimates)
    if est.ndim != 2:
        raise ValueError("estimates must be an (antennas, served) matrix")
    n_ant, served = est.shape
    if served > n_ant:
        raise ValueError(f"ZF cannot serve {served} UEs with {n_ant} antennas")
    if ue_indices is None:
        ue_indices = tuple(range(served))
    gram = est.conj().T @ est
    try:
        raw = np.linalg.solve(gram.T, est.T).T      # est @ inv(gram)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("rank-deficient estimated channel matrix") from exc
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0):
        raise np.linalg.LinAlgError("degenerate ZF direction")
    w = raw * (np.sqrt(power / served) / norms)[None, :]
    return Precoder(w=w, power=float(power), ue_indices=tuple(int(i) for i in ue_indices))


def _channel_row(channels: ChannelSet, bs: int, k: int) -> np.ndarray:
    """Conjugate downlink row of UE k from BS ``bs`` (0 = MBS, s+1 = SBS s)."""
    if bs == 0:
        return channels.h_mbs[:, k].conj()
    return channels.g_sbs[bs - 1][:, k].conj()


def dl_rate(
    channels: ChannelSet,
    precoders: Mapping[int, Precoder],
    assoc: Association,
    noise_power: float,
) -> DownlinkRates:
    """Per-UE downlink SINR against the true channels.

    Every stream of every BS interferes (full frequency reuse); the desired
    stream is the serving BS's column for that UE.
    """
    k_total = channels.h_mbs.shape[1]
    sinr = np.zeros(k_total)
    for k in range(k_total):
        serving = int(assoc.dl_serving[k])
        desired = 0.0
        interference = 0.0
        for bs, pre in precoders.items():
            row = _channel_row(channels, bs, k)
            powers = np.abs(row @ pre.w) ** 2
            for col, ue in enumerate(pre.ue_indices):
                if bs == serving and ue == k:
                    desired = powers[col]
                else:
                    interference += powers[col]
        sinr[k] = desired / (interference + noise_power)
    rate = np.log2(1.0 + sinr)
    labels = ue_classes(assoc)
    per_class = {"all": float(np.mean(rate))}
    for cls in UE_CLASSES:
        mask = labels == cls
        per_class[cls] = float(np.mean(rate[mask])) if np.any(mask) else math.nan
    return DownlinkRates(sinr=sinr, rate=rate, per_class=per_class)
