import math

import numpy as np
import pytest

from hetnetsim import estimators
from hetnetsim.data_aided import BerSource
from hetnetsim.detectors import Modulation
from hetnetsim.experiments import (
    CSV_HEADER,
    ExperimentSpec,
    Metric,
    ResultTable,
    load_config,
    oracle_ber_numeric,
    read_csv,
    run_sweep,
    split_config,
    write_csv,
)
from hetnetsim.scenario import SystemConfig, desk_config


def _tiny_spec(metric=Metric.NMSE, **kw):
    defaults = dict(
        base=desk_config(num_sbs=5, num_ue=5, mbs_antennas=16, tau_t=5, tau_d=16),
        sweep_param="p_train_dbm",
        sweep_values=(3.0, 13.0),
        metric=metric,
        trials=3,
        topologies=2,
        master_seed=7,
    )
    defaults.update(kw)
    return ExperimentSpec(**defaults)


def test_spec_validation():
    with pytest.raises(ValueError, match="non-empty"):
        _tiny_spec(sweep_values=())
    with pytest.raises(ValueError, match="sorted"):
        _tiny_spec(sweep_values=(13.0, 3.0))
    with pytest.raises(ValueError, match="unknown sweep"):
        _tiny_spec(sweep_param="nonsense")
    with pytest.raises(ValueError, match="trials"):
        _tiny_spec(trials=0)
    with pytest.raises(ValueError, match="detector"):
        _tiny_spec(detectors=("mrc", "foo"))


def test_run_sweep_deterministic():
    a = run_sweep(_tiny_spec())
    b = run_sweep(_tiny_spec())
    assert a == b


def test_run_sweep_thread_count_does_not_change_output():
    serial = run_sweep(_tiny_spec(), threads=1)
    parallel = run_sweep(_tiny_spec(), threads=2)
    assert serial == parallel


def test_nmse_rows_cover_methods_and_classes():
    table = run_sweep(_tiny_spec())
    methods = {r.method for r in table.rows}
    assert methods == {"ls", "mmse", "da"}
    assert {r.metric for r in table.rows} == {"nmse_db"}
    for row in table.rows:
        assert row.ue_class in ("decoupled", "mue")
        assert row.n > 0


def test_ber_rows_include_analytic_for_bpsk_only():
    bpsk = run_sweep(_tiny_spec(metric=Metric.BER, trials=2))
    assert {"mmse-analytic", "mmse-lower"} <= {r.method for r in bpsk.rows}
    qam = run_sweep(_tiny_spec(metric=Metric.BER, trials=2,
                               modulation=Modulation.QAM16))
    assert not {"mmse-analytic", "mmse-lower"} & {r.method for r in qam.rows}


def test_rate_rows_have_both_modes():
    table = run_sweep(_tiny_spec(metric=Metric.RATE, trials=2))
    assert {r.method for r in table.rows} == {"po", "da"}
    assert "all" in {r.ue_class for r in table.rows}


def test_zero_error_mode_beats_empirical_side_info():
    noisy = run_sweep(_tiny_spec(ber_source=BerSource.EMPIRICAL_ORACLE,
                                 base=desk_config(p_train_dbm=-7.0)))
    clean = run_sweep(_tiny_spec(ber_source=BerSource.ZERO_ERROR,
                                 base=desk_config(p_train_dbm=-7.0)))
    v_noisy = noisy.value(sweep_value=3.0, method="da", ue_class="decoupled")
    v_clean = clean.value(sweep_value=3.0, method="da", ue_class="decoupled")
    assert v_clean <= v_noisy + 0.2


def test_aggregation_matches_manual_recompute():
    # the reported mean is the average of per-topology means
    spec = _tiny_spec(topologies=3)
    table = run_sweep(spec)
    from hetnetsim.experiments import _topology_metrics

    per_topo = [_topology_metrics(spec, 3.0, p)[("mmse", "mue")] for p in range(3)]
    assert table.value(sweep_value=3.0, method="mmse", ue_class="mue") == \
        pytest.approx(np.mean(per_topo))
    row = table.filtered(sweep_value=3.0, method="mmse", ue_class="mue")[0]
    assert row.stderr == pytest.approx(np.std(per_topo, ddof=1) / math.sqrt(3))


def test_mutated_mmse_shrinkage_breaks_validation(monkeypatch):
    # sanity of the validation harness itself: a 2x shrinkage error in the
    # MMSE estimator must trip the closed-form agreement check
    from hetnetsim import validation

    true_fn = estimators.mmse_estimate_matrix

    def tampered(obs, pilots, betas, noise_power):
        return 2.0 * true_fn(obs, pilots, betas, noise_power)

    monkeypatch.setattr(estimators, "mmse_estimate_matrix", tampered)
    result = validation.check_pilot_only_closed_forms(master_seed=1)
    assert not result.passed


def test_write_csv_round_trip(tmp_path):
    table = run_sweep(_tiny_spec())
    path = tmp_path / "out.csv"
    write_csv(table, path)
    text = path.read_text()
    assert text.splitlines()[0] == CSV_HEADER
    again = read_csv(path)
    emitted = {(r.sweep_value, r.method, r.ue_class): r.mean for r in again.rows}
    for row in table.rows:
        key = (row.sweep_value, row.method, row.ue_class)
        assert emitted[key] == float(f"{row.mean:.10e}")


def test_write_csv_empty_table(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(ResultTable(rows=()), path)
    assert path.read_text() == CSV_HEADER + "\n"


def test_write_csv_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(_tiny_spec()), a)
    write_csv(run_sweep(_tiny_spec()), b)
    assert a.read_bytes() == b.read_bytes()


def test_read_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_oracle_ber_numeric_closed_form_point():
    expected = 0.5 * (1.0 - math.sqrt(2.0 / 4.0))
    assert oracle_ber_numeric(1.0, 2.0) == pytest.approx(expected, rel=1e-10)


def test_oracle_ber_numeric_zero_snr():
    assert oracle_ber_numeric(2.0, 0.0) == 0.5
    assert oracle_ber_numeric(2.0, 1e-9) == pytest.approx(0.5, abs=1e-3)


def test_split_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown"):
        split_config({"num_ue": 4, "frobnicate": 1})


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"num_ue": 4, "num_sbs": 3, "tau_t": 6, "trials": 9,'
                    ' "modulation": "qam4"}\n')
    cfg, experiment = load_config(path)
    assert cfg.num_ue == 4 and cfg.tau_t == 6
    assert experiment == {"trials": 9, "modulation": "qam4"}


def test_config_defaults_are_table_defaults():
    cfg, experiment = split_config({})
    assert SystemConfig(**cfg).num_ue == 30
    assert experiment == {}
