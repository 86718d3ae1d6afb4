"""Uplink data modulation, linear combining with imperfect CSI, and decoding."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .phy import Observation, Phase, as_rng

log = logging.getLogger(__name__)


class Modulation(str, enum.Enum):
    BPSK = "bpsk"
    QAM4 = "qam4"
    QAM16 = "qam16"

    @property
    def bits_per_symbol(self) -> int:
        return {"bpsk": 1, "qam4": 2, "qam16": 4}[self.value]


class CombinerKind(str, enum.Enum):
    MRC = "mrc"
    ZF = "zf"
    MMSE = "mmse"


# Gray-coded amplitude levels per 2 bits: 00 01 11 10
_GRAY_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
_GRAY_ORDER = np.array([0, 1, 3, 2])


def _constellation(scheme: Modulation, p_d: float):
    """(points, bit patterns) with the average symbol power normalised to p_d."""
    if scheme is Modulation.BPSK:
        points = np.sqrt(p_d) * np.array([1.0, -1.0], dtype=complex)
        bits = np.array([[0], [1]])
        return points, bits
    if scheme is Modulation.QAM4:
        amp = np.sqrt(p_d / 2.0)
        points, bits = [], []
        for b0 in (0, 1):
            for b1 in (0, 1):
                points.append(amp * ((1 - 2 * b0) + 1j * (1 - 2 * b1)))
                bits.append([b0, b1])
        return np.array(points), np.array(bits)
    if scheme is Modulation.QAM16:
        scale = np.sqrt(p_d / 10.0)     # E[l^2] = 5 per axis for levels {+-1,+-3}
        points, bits = [], []
        for gi, i_lvl in zip(_GRAY_ORDER, _GRAY_LEVELS):
            for gq, q_lvl in zip(_GRAY_ORDER, _GRAY_LEVELS):
                points.append(scale * (i_lvl + 1j * q_lvl))
                bits.append([gi >> 1, gi & 1, gq >> 1, gq & 1])
        return np.array(points), np.array(bits)
    raise ValueError(f"unknown modulation {scheme}")


@dataclass(frozen=True)
class DataBlock:
    bits: np.ndarray                   # (K, tau_d * bits_per_symbol)
    symbols: np.ndarray                # (K, tau_d)
    modulation: Modulation
    power: float

    @property
    def tau_d(self) -> int:
        return self.symbols.shape[1]


@dataclass(frozen=True)
class Combiner:
    """Rows applied to a data observation; row i belongs to ue_indices[i].

    ``gain[i]`` is the row's response to its own estimated channel; detect
    divides it out before slicing so amplitude-coded constellations are not
    hurt by the MMSE bias (a positive real factor, harmless for BPSK/QAM4).
    """

    c: np.ndarray                      # (n, antennas)
    kind: CombinerKind
    ue_indices: tuple
    gain: np.ndarray                   # (n,) complex

    def row_for(self, k: int) -> int:
        try:
            return self.ue_indices.index(k)
        except ValueError:
            raise IndexError(f"UE {k} is not covered by this combiner") from None


def modulate(bits, scheme: Modulation, p_d: float) -> DataBlock:
    """Map a (K, n_bits) binary matrix onto constellation symbols with
    average power p_d.  Random payloads come from ``random_bits``."""
    scheme = Modulation(scheme)
    bits = np.asarray(bits, dtype=int)
    bps = scheme.bits_per_symbol
    if bits.ndim != 2 or bits.shape[1] % bps:
        raise ValueError(
            f"bit count per UE must be a multiple of {bps} for {scheme.value}"
        )
    points, table = _constellation(scheme, p_d)
    groups = bits.reshape(bits.shape[0], -1, bps)
    idx = np.zeros(groups.shape[:2], dtype=int)
    for b in range(bps):
        idx = (idx << 1) | groups[:, :, b]
    # map bit patterns to constellation indices
    lut = np.empty(2 ** bps, dtype=int)
    for row, pattern in enumerate(table):
        code = 0
        for b in pattern:
            code = (code << 1) | int(b)
        lut[code] = row
    symbols = points[lut[idx]]
    return DataBlock(bits=bits, symbols=symbols, modulation=scheme, power=float(p_d))


def random_bits(num_ue: int, tau_d: int, scheme: Modulation, seed) -> np.ndarray:
    scheme = Modulation(scheme)
    rng = as_rng(seed)
    return rng.integers(0, 2, size=(num_ue, tau_d * scheme.bits_per_symbol))


def build_combiner(
    kind: CombinerKind,
    estimates: np.ndarray,
    betas,
    p_t: float,
    tau_t: int,
    p_d: float,
    noise_power: float,
    ue_indices=None,
) -> Combiner:
    """Linear receive combiner from estimated channels.

    ``estimates`` holds one column per covered UE.  MRC/ZF expect only the
    UEs served by this BS; the MMSE rows regularise with the full residual
    interference level, so ``betas`` must list every co-channel UE's gain.
    """
    kind = CombinerKind(kind)
    est = np.asarray(estimates)
    n_ant, n_ue = est.shape
    if ue_indices is None:
        ue_indices = tuple(range(n_ue))
    else:
        ue_indices = tuple(int(i) for i in ue_indices)

    if kind is CombinerKind.ZF and n_ue > n_ant:
        log.warning(
            "ZF needs served count <= antennas (%d > %d); falling back to MMSE",
            n_ue, n_ant,
        )
        kind = CombinerKind.MMSE

    if kind is CombinerKind.MRC:
        norms = np.sum(np.abs(est) ** 2, axis=0)
        if np.any(norms == 0):
            raise ValueError("MRC needs non-zero channel estimates")
        rows = (est / norms[None, :]).conj().T
    elif kind is CombinerKind.ZF:
        gram = est.conj().T @ est
        try:
            rows = np.linalg.solve(gram, est.conj().T)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("rank-deficient estimate matrix for ZF") from exc
    else:
        betas = np.asarray(betas, dtype=float)
        resid = np.sum(noise_power * betas / (noise_power + betas * p_t * tau_t))
        reg = resid + noise_power / p_d
        cov = est @ est.conj().T + reg * np.eye(n_ant)
        rows = np.linalg.solve(cov, est).conj().T

    gain = np.einsum("ij,ji->i", rows, est)
    return Combiner(c=rows, kind=kind, ue_indices=ue_indices, gain=gain)


def _slice(symbols: np.ndarray, scheme: Modulation, p_d: float):
    """Nearest-point decisions; returns (bits, constellation symbols)."""
    points, table = _constellation(scheme, p_d)
    idx = np.argmin(np.abs(symbols[..., None] - points[None, None, :]) ** 2, axis=-1)
    bits = table[idx].reshape(idx.shape[0], -1)
    return bits, points[idx]


def detect(obs: Observation, combiner: Combiner, block: DataBlock, k: int):
    """Combine, slice, and score one UE's uplink data.

    Returns (decoded bits, empirical BER) where BER counts bit flips against
    the transmitted payload in ``block``.
    """
    if obs.phase is not Phase.DATA:
        raise ValueError("detect needs a data-phase observation")
    row = combiner.row_for(k)
    out = combiner.c[row] @ obs.y
    out = out / combiner.gain[row]
    bits_hat, _ = _slice(out[None, :], block.modulation, block.power)
    bits_hat = bits_hat[0]
    ber = float(np.mean(bits_hat != block.bits[k]))
    return bits_hat, ber


def detect_all(obs: Observation, combiner: Combiner, block: DataBlock):
    """Vectorised detect over every UE the combiner covers.

    Returns (bits matrix, decoded symbol matrix, per-UE BER) aligned with
    ``combiner.ue_indices``.
    """
    if obs.phase is not Phase.DATA:
        raise ValueError("detect needs a data-phase observation")
    out = (combiner.c @ obs.y) / combiner.gain[:, None]
    bits_hat, symbols_hat = _slice(out, block.modulation, block.power)
    truth = block.bits[list(combiner.ue_indices)]
    ber = np.mean(bits_hat != truth, axis=1)
    return bits_hat, symbols_hat, ber


def mmse_sinr(estimates: np.ndarray, rho_v: float) -> np.ndarray:
    """Post-combining SINR of the MMSE receiver for every column of the
    estimated channel matrix: 1/[(I + rho G^H G)^{-1}]_kk - 1."""
    est = np.asarray(estimates)
    k = est.shape[1]
    a = np.eye(k) + rho_v * (est.conj().T @ est)
    inv = np.linalg.inv(a)
    return 1.0 / np.real(np.diag(inv)) - 1.0
