"""Seeded Monte Carlo sweep harness for the three-stage estimation scheme.

A sweep regenerates topologies and channel realizations from counter-based
substreams of one master seed, runs training, uplink detection, data-aided
estimation and (for the rate metric) downlink evaluation, then aggregates
per UE class into a tidy table.  Results are a pure function of the
ExperimentSpec; the worker count never changes the output.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from . import ber_analytic, data_aided, detectors, downlink, estimators, phy, scenario
from .data_aided import BerSource
from .detectors import CombinerKind, Modulation
from .phy import Phase
from .scenario import SystemConfig

log = logging.getLogger(__name__)

# substream purposes (first tuple slot after topology/trial indices)
PH_TOPOLOGY = 0
PH_CHANNELS = 1
PH_NOISE_TRAIN = 2
PH_NOISE_DATA = 3
PH_BITS = 4

DETECTOR_CHOICES = ("mrc", "zf", "mmse")
ESTIMATOR_CHOICES = ("ls", "mmse", "da")


class Metric(str, enum.Enum):
    BER = "ber"
    NMSE = "nmse"
    RATE = "rate"


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig
    sweep_param: str
    sweep_values: tuple
    metric: Metric
    detectors: tuple = DETECTOR_CHOICES
    estimators: tuple = ESTIMATOR_CHOICES
    modulation: Modulation = Modulation.BPSK
    trials: int = 100
    topologies: int = 20
    master_seed: int = 1
    ber_source: BerSource = BerSource.ANALYTIC_PROP1

    def __post_init__(self):
        if not self.sweep_values:
            raise ValueError("sweep value list must be non-empty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise ValueError("sweep values must be sorted")
        if self.trials < 1 or self.topologies < 1:
            raise ValueError("trials and topologies must be >= 1")
        if self.sweep_param not in {f.name for f in dataclasses.fields(SystemConfig)}:
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}")
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "modulation", Modulation(self.modulation))
        object.__setattr__(self, "ber_source", BerSource(self.ber_source))
        for d in self.detectors:
            if d not in DETECTOR_CHOICES:
                raise ValueError(f"unknown detector {d!r}")
        for e in self.estimators:
            if e not in ESTIMATOR_CHOICES:
                raise ValueError(f"unknown estimator {e!r}")


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float
    method: str
    ue_class: str
    metric: str
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class ResultTable:
    rows: tuple

    def filtered(self, **match) -> list:
        out = []
        for row in self.rows:
            if all(getattr(row, key) == val for key, val in match.items()):
                out.append(row)
        return out

    def value(self, **match) -> float:
        rows = self.filtered(**match)
        if len(rows) != 1:
            raise KeyError(f"expected exactly one row for {match}, found {len(rows)}")
        return rows[0].mean


def _apply_sweep(base: SystemConfig, name: str, value) -> SystemConfig:
    if name in ("tau_t", "tau_d", "num_sbs", "num_ue", "mbs_antennas", "sbs_antennas"):
        value = int(value)
    return base.replace(**{name: value})


def _effective_ber_source(spec: ExperimentSpec) -> BerSource:
    # the Gamma-matched prediction is derived for binary modulation only
    if (spec.modulation is not Modulation.BPSK
            and spec.ber_source is BerSource.ANALYTIC_PROP1):
        log.debug("non-binary modulation: combiner falls back to empirical BER")
        return BerSource.EMPIRICAL_ORACLE
    return spec.ber_source


def analytic_ber_vector(cfg: SystemConfig, topo, assoc) -> np.ndarray:
    """Predicted uplink BER of every UE at its UL serving BS."""
    bers = np.zeros(topo.num_ue)
    for k in range(topo.num_ue):
        v = int(assoc.ul_serving[k])
        if v == 0:
            bers[k] = ber_analytic.analytic_bpsk_ber(
                cfg.mbs_antennas, topo.beta_mbs, k, cfg.p_train_mw, cfg.tau_t,
                cfg.noise_power_mw, cfg.p_data_mw)
        else:
            bers[k] = ber_analytic.analytic_bpsk_ber(
                cfg.sbs_antennas, topo.beta_sbs[v - 1], k, cfg.p_train_mw, cfg.tau_t,
                cfg.noise_power_mw, cfg.p_data_mw)
    return bers


def _bs_view(cfg: SystemConfig, topo, channels, v: int):
    """(channel matrix, betas, antenna count) of BS v; 0 is the MBS."""
    if v == 0:
        return channels.h_mbs, topo.beta_mbs, cfg.mbs_antennas
    return channels.g_sbs[v - 1], topo.beta_sbs[v - 1], cfg.sbs_antennas


def _topology_metrics(spec: ExperimentSpec, sweep_value, topo_idx: int) -> dict:
    """One topology's contribution: {(method, ue_class): value}."""
    cfg = _apply_sweep(spec.base, spec.sweep_param, sweep_value)
    seed = spec.master_seed
    topo = scenario.build_topology(cfg, phy.stream(seed, topo_idx, PH_TOPOLOGY))
    assoc = scenario.associate(topo, cfg)
    labels = scenario.ue_classes(assoc)
    decoupled = assoc.decoupled
    k_total = cfg.num_ue
    n0 = cfg.noise_power_mw
    p_t, p_d = cfg.p_train_mw, cfg.p_data_mw
    pilots = phy.make_pilots(k_total, cfg.tau_t, p_t)
    ber_source = _effective_ber_source(spec)

    if spec.metric is Metric.BER:
        ul_bs = sorted({int(assoc.ul_serving[k]) for k in decoupled})
    else:
        ul_bs = sorted({int(v) for v in assoc.ul_serving})
    dl_sbs = sorted({int(b) for b in assoc.dl_serving if b != 0})
    need_mbs = spec.metric is not Metric.BER
    listeners = set(ul_bs)
    if need_mbs:
        listeners.add(0)
    if spec.metric is Metric.RATE:
        listeners.update(dl_sbs)

    analytic_bers = None
    if ber_source is BerSource.ANALYTIC_PROP1 or spec.metric is Metric.BER:
        if spec.modulation is Modulation.BPSK:
            analytic_bers = analytic_ber_vector(cfg, topo, assoc)

    nmse_num = {m: np.zeros(k_total) for m in spec.estimators}
    nmse_den = np.zeros(k_total)
    ber_err = {d: np.zeros(k_total) for d in spec.detectors}
    ber_tot = {d: np.zeros(k_total) for d in spec.detectors}
    rate_sum = {mode: {} for mode in ("po", "da")}
    rate_cnt = {mode: {} for mode in ("po", "da")}

    for t in range(spec.trials):
        channels = phy.draw_channels(topo, cfg, phy.stream(seed, topo_idx, t, PH_CHANNELS))
        bits = detectors.random_bits(
            k_total, cfg.tau_d, spec.modulation, phy.stream(seed, topo_idx, t, PH_BITS))
        block = detectors.modulate(bits, spec.modulation, p_d)

        # stage 1 + 2 observations at every BS that has to listen
        train_obs, data_obs, est = {}, {}, {}
        for v in sorted(listeners):
            chan, betas_v, _ = _bs_view(cfg, topo, channels, v)
            train_obs[v] = phy.observe(
                chan, pilots.s, n0,
                phy.stream(seed, topo_idx, t, PH_NOISE_TRAIN, v), Phase.TRAINING)
            est[v] = estimators.mmse_estimate_matrix(train_obs[v], pilots, betas_v, n0)
            if cfg.tau_d:
                data_obs[v] = phy.observe(
                    chan, block.symbols, n0,
                    phy.stream(seed, topo_idx, t, PH_NOISE_DATA, v), Phase.DATA)

        # uplink detection at each serving BS
        x_hat = np.zeros((k_total, cfg.tau_d), dtype=complex)
        emp_ber = np.zeros(k_total)
        for v in ul_bs if cfg.tau_d else ():
            _, betas_v, _ = _bs_view(cfg, topo, channels, v)
            served = np.where(assoc.ul_serving == v)[0]
            if spec.metric is Metric.BER:
                served = np.intersect1d(served, decoupled)
            if "mmse" in spec.detectors or spec.metric is not Metric.BER:
                comb = detectors.build_combiner(
                    CombinerKind.MMSE, est[v], betas_v, p_t, cfg.tau_t, p_d, n0)
                bh, sh, bv = detectors.detect_all(data_obs[v], comb, block)
                x_hat[served] = sh[served]
                emp_ber[served] = bv[served]
                if spec.metric is Metric.BER and "mmse" in spec.detectors:
                    nbits = block.bits.shape[1]
                    ber_err["mmse"][served] += bv[served] * nbits
                    ber_tot["mmse"][served] += nbits
            if spec.metric is Metric.BER:
                for det in spec.detectors:
                    if det == "mmse":
                        continue
                    for k in served:
                        cols = [k] if det == "mrc" else list(
                            np.where(assoc.ul_serving == v)[0])
                        comb = detectors.build_combiner(
                            CombinerKind(det), est[v][:, cols], betas_v,
                            p_t, cfg.tau_t, p_d, n0, ue_indices=cols)
                        _, ber_k = detectors.detect(data_obs[v], comb, block, k)
                        ber_err[det][k] += ber_k * block.bits.shape[1]
                        ber_tot[det][k] += block.bits.shape[1]

        if spec.metric is Metric.BER:
            continue

        # stage 3: data-aided estimation at the MBS
        if ber_source is BerSource.ZERO_ERROR:
            side = data_aided.DecodedSideInfo(
                x_hat=block.symbols, ber=np.zeros(k_total),
                source=ber_source, power=p_d)
        elif ber_source is BerSource.ANALYTIC_PROP1:
            side = data_aided.DecodedSideInfo(
                x_hat=x_hat, ber=analytic_bers, source=ber_source, power=p_d)
        else:
            side = data_aided.DecodedSideInfo(
                x_hat=x_hat, ber=emp_ber, source=ber_source, power=p_d)

        if cfg.tau_d:
            joint = phy.joint_observation(train_obs[0], data_obs[0])
        else:
            joint = phy.Observation(y=train_obs[0].y, phase=Phase.JOINT, noise_power=n0)
        h_da = data_aided.da_estimate_matrix(joint, pilots, side, topo.beta_mbs, n0)

        if spec.metric is Metric.NMSE:
            truth = channels.h_mbs
            nmse_den += np.sum(np.abs(truth) ** 2, axis=0)
            for m in spec.estimators:
                if m == "ls":
                    h_est = estimators.ls_estimate_matrix(train_obs[0], pilots)
                elif m == "mmse":
                    h_est = est[0]
                else:
                    h_est = h_da
                nmse_num[m] += np.sum(np.abs(h_est - truth) ** 2, axis=0)
            continue

        # downlink: ZF precoding from pilot-only vs data-aided estimates
        sbs_precoders = {}
        for v in dl_sbs:
            idx = np.where(assoc.dl_serving == v)[0]
            sbs_precoders[v] = downlink.zf_precode(
                est[v][:, idx], cfg.p_sbs_mw, ue_indices=idx)
        mbs_idx = np.where(assoc.dl_serving == 0)[0]
        for mode, h_est in (("po", est[0]), ("da", h_da)):
            precoders = dict(sbs_precoders)
            if len(mbs_idx):
                precoders[0] = downlink.zf_precode(
                    h_est[:, mbs_idx], cfg.p_mbs_mw, ue_indices=mbs_idx)
            rates = downlink.dl_rate(channels, precoders, assoc, n0)
            for cls in ("decoupled", "mue", "sue", "all"):
                mask = labels == cls if cls != "all" else np.ones(k_total, bool)
                if not np.any(mask):
                    continue
                rate_sum[mode][cls] = rate_sum[mode].get(cls, 0.0) + float(
                    np.sum(rates.rate[mask]))
                rate_cnt[mode][cls] = rate_cnt[mode].get(cls, 0) + int(np.sum(mask))

    # fold trial accumulators into per-topology values
    out = {}
    if spec.metric is Metric.NMSE:
        for m in spec.estimators:
            for cls in ("decoupled", "mue"):
                idx = np.where(labels == cls)[0]
                idx = idx[nmse_den[idx] > 0] if len(idx) else idx
                if not len(idx):
                    continue
                per_ue_db = 10.0 * np.log10(
                    np.maximum(nmse_num[m][idx], 1e-300) / nmse_den[idx])
                out[(m, cls)] = float(np.mean(per_ue_db))
    elif spec.metric is Metric.BER:
        for det in spec.detectors:
            tot = float(np.sum(ber_tot[det][decoupled])) if len(decoupled) else 0.0
            if tot > 0:
                out[(det, "decoupled")] = float(
                    np.sum(ber_err[det][decoupled]) / tot)
        if analytic_bers is not None and "mmse" in spec.detectors and len(decoupled):
            out[("mmse-analytic", "decoupled")] = float(
                np.mean(analytic_bers[decoupled]))
            lows = [
                ber_analytic.ber_lower_bound(ber_analytic.bpsk_detection_model(
                    ber_analytic.gamma_model_for_ue(
                        cfg.sbs_antennas, topo.beta_sbs[int(assoc.ul_serving[k]) - 1],
                        k, p_t, cfg.tau_t, n0, p_d)))
                for k in decoupled
            ]
            out[("mmse-lower", "decoupled")] = float(np.mean(lows))
    else:
        for mode in ("po", "da"):
            for cls, total in rate_sum[mode].items():
                out[(mode, cls)] = total / rate_cnt[mode][cls]
    return out


def _worker(args):
    spec, sweep_value, topo_idx = args
    try:
        return (sweep_value, topo_idx, _topology_metrics(spec, sweep_value, topo_idx))
    except Exception as exc:
        raise RuntimeError(
            f"sweep {spec.sweep_param}={sweep_value}, topology {topo_idx}, "
            f"master seed {spec.master_seed}: {exc}"
        ) from exc


def run_sweep(spec: ExperimentSpec, threads: int = 1) -> ResultTable:
    """Run the configured sweep and aggregate per (value, method, class).

    Per-topology means feed the reported mean and standard error; trial and
    topology substreams are keyed by index, so output is identical for any
    ``threads`` value.
    """
    tasks = [
        (spec, value, p)
        for value in spec.sweep_values
        for p in range(spec.topologies)
    ]
    results = {}
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for value, p, metrics in pool.map(_worker, tasks, chunksize=1):
                results[(value, p)] = metrics
    else:
        for task in tasks:
            value, p, metrics = _worker(task)
            results[(value, p)] = metrics

    metric_name = {
        Metric.NMSE: "nmse_db", Metric.BER: "ber", Metric.RATE: "rate_bps_hz"
    }[spec.metric]
    rows = []
    for value in spec.sweep_values:
        keys = sorted({
            key for p in range(spec.topologies) for key in results[(value, p)]
        })
        for method, cls in keys:
            samples = [
                results[(value, p)][(method, cls)]
                for p in range(spec.topologies)
                if (method, cls) in results[(value, p)]
            ]
            mean = float(np.mean(samples))
            stderr = (
                float(np.std(samples, ddof=1) / math.sqrt(len(samples)))
                if len(samples) > 1 else 0.0
            )
            rows.append(ResultRow(
                sweep_param=spec.sweep_param,
                sweep_value=float(value),
                method=method,
                ue_class=cls,
                metric=metric_name,
                mean=mean,
                stderr=stderr,
                n=len(samples) * spec.trials,
            ))
    return ResultTable(rows=tuple(rows))


CSV_HEADER = "sweep_param,sweep_value,method,ue_class,metric,mean,stderr,n"


def write_csv(table: ResultTable, path) -> None:
    """Deterministic fixed-precision CSV, one row per table entry."""
    lines = [CSV_HEADER]
    for row in sorted(table.rows, key=lambda r: (r.sweep_value, r.method, r.ue_class)):
        lines.append(
            f"{row.sweep_param},{row.sweep_value:g},{row.method},{row.ue_class},"
            f"{row.metric},{row.mean:.10e},{row.stderr:.10e},{row.n}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> ResultTable:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} is not a sweep result file")
    rows = []
    for line in lines[1:]:
        param, value, method, cls, metric, mean, stderr, n = line.split(",")
        rows.append(ResultRow(
            sweep_param=param, sweep_value=float(value), method=method,
            ue_class=cls, metric=metric, mean=float(mean),
            stderr=float(stderr), n=int(n),
        ))
    return ResultTable(rows=tuple(rows))


def oracle_ber_numeric(alpha: float, xi: float) -> float:
    """Adaptive quadrature of the Gamma-weighted Gaussian tail integral;
    the independent cross-check for the hypergeometric closed form."""
    if alpha <= 0 or xi < 0:
        raise ValueError("Gamma parameters must be positive")
    if xi == 0.0:
        return 0.5

    # substitute x = xi * t so the Gamma mass sits near t = alpha for any xi
    def integrand(t):
        log_pdf = (alpha - 1.0) * np.log(t) - t - special.gammaln(alpha)
        return np.exp(log_pdf) * ber_analytic.q_function(np.sqrt(xi * t))

    value, err = integrate.quad(
        integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    if not math.isfinite(value) or err > max(1e-10, 1e-6 * abs(value)):
        raise RuntimeError(f"quadrature failed at alpha={alpha}, xi={xi} (err={err})")
    return float(value)


def validate(master_seed: int = 1, threads: int = 1):
    """Run the full desk-scale validation suite; see hetnetsim.validation."""
    from . import validation

    return validation.run_validation(master_seed=master_seed, threads=threads)


# ---------------------------------------------------------------------------
# configuration files (flat JSON, keys mirror the dataclass fields)

_SYSTEM_KEYS = {f.name for f in dataclasses.fields(SystemConfig)}
_EXPERIMENT_KEYS = {
    "trials", "topologies", "modulation", "ber_source", "detectors", "estimators",
}


def split_config(raw: dict):
    """Separate a flat config dict into SystemConfig kwargs and experiment
    kwargs, rejecting unknown keys."""
    unknown = set(raw) - _SYSTEM_KEYS - _EXPERIMENT_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    system = {k: v for k, v in raw.items() if k in _SYSTEM_KEYS}
    experiment = {k: v for k, v in raw.items() if k in _EXPERIMENT_KEYS}
    for key in ("detectors", "estimators"):
        if key in experiment:
            experiment[key] = tuple(experiment[key])
    return system, experiment


def load_config(path) -> tuple:
    """Load a flat JSON config file into (SystemConfig, experiment kwargs)."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a flat JSON object")
    system, experiment = split_config(raw)
    return SystemConfig(**system), experiment


def dump_config(cfg: SystemConfig, experiment: dict | None = None) -> str:
    """Round-trippable JSON view of the effective configuration."""
    data = dataclasses.asdict(cfg)
    data["pathloss_model"] = cfg.pathloss_model.value
    if experiment:
        data.update({
            k: (list(v) if isinstance(v, tuple) else
                v.value if isinstance(v, enum.Enum) else v)
            for k, v in experiment.items()
        })
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
