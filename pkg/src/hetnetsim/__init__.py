"""Simulation library for data-aided channel estimation in decoupled HetNets.

Modules
-------
scenario     cell geometry, path loss, modified-MARP association
phy          fading channels, orthogonal pilots, noisy observations
estimators   pilot-only LS/MMSE estimation and closed-form NMSE
detectors    modulation, MRC/ZF/MMSE combining, symbol decisions
ber_analytic Gamma-matched SINR law and closed-form BER
data_aided   BER-aware data-aided MMSE estimation and its NMSE predictors
downlink     ZF beamforming and the average-rate metric
experiments  seeded parallel sweep harness, CSV output, validation entry
cli          command-line front end
"""

from .scenario import (
    Association,
    Link,
    PathLossModel,
    SystemConfig,
    Topology,
    associate,
    build_topology,
    desk_config,
    path_loss,
    topology_from_positions,
    ue_classes,
)
from .phy import (
    ChannelSet,
    Observation,
    Phase,
    PilotMatrix,
    draw_channels,
    joint_observation,
    make_pilots,
    observe,
    stream,
)
from .estimators import (
    ChannelEstimate,
    EstimateStats,
    EstMethod,
    analytic_nmse_pilot_only,
    ls_estimate,
    mmse_error_stats,
    mmse_estimate,
)
from .detectors import (
    Combiner,
    CombinerKind,
    DataBlock,
    Modulation,
    build_combiner,
    detect,
    mmse_sinr,
    modulate,
    random_bits,
)
from .ber_analytic import (
    SinrGammaModel,
    analytic_ber,
    ber_lower_bound,
    effective_rho,
    hyp2f1,
    sinr_gamma_params,
    stieltjes_moments,
)
from .data_aided import (
    BerSource,
    DecodedSideInfo,
    ErrorExpectation,
    NmsePrediction,
    analytic_nmse_da,
    da_estimate,
    da_power_floor,
    empirical_nmse,
    error_expectation,
)
from .downlink import DownlinkRates, Precoder, dl_rate, zf_precode
from .experiments import (
    ExperimentSpec,
    Metric,
    ResultRow,
    ResultTable,
    oracle_ber_numeric,
    run_sweep,
    validate,
    write_csv,
)

__version__ = "0.1.0"
