"""Tests for experiment orchestration, config parsing and the CLI."""

import json

import numpy as np
import pytest

from damlink.channel import SimConfig
from damlink.cli import main
from damlink.experiments import (
    ExperimentSpec,
    ParseError,
    parse_config,
    run_experiment,
    trial_seed,
    write_json_sidecar,
    write_table_csv,
)


def small_cfg(**overrides):
    base = dict(
        M_t=8, M_r=2, K=2, L=2, M=32, delay_span_samples=10, G_cp=10,
        rho_window=30, g_ls_db=0.0,
    )
    base.update(overrides)
    return SimConfig(**base)


def small_spec(kind="se_vs_power_bsside", **overrides):
    base = dict(kind=kind, config=small_cfg(), grid=(20.0, 30.0), trials=3, seed=7)
    base.update(overrides)
    return ExperimentSpec(**base)


class TestRunExperiment:
    def test_deterministic_output(self, tmp_path):
        spec = small_spec()
        t1 = run_experiment(spec)
        t2 = run_experiment(spec)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_table_csv(t1, p1)
        write_table_csv(t2, p2)
        assert p1.read_bytes() == p2.read_bytes()
        j1, j2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json_sidecar(t1, j1)
        write_json_sidecar(t2, j2)
        assert j1.read_bytes() == j2.read_bytes()

    def test_rows_cover_grid_times_schemes(self):
        table = run_experiment(small_spec())
        schemes = {r.scheme for r in table.rows}
        assert schemes == {"dam-eigen", "dam-isizf", "ofdm-eigen", "ofdm-zf-wf"}
        assert len(table.rows) == 2 * len(schemes)

    def test_parallel_equals_sequential(self):
        spec = small_spec(trials=4)
        seq = run_experiment(spec, threads=1)
        par = run_experiment(spec, threads=4)
        assert seq.rows == par.rows
        for key in seq.samples:
            assert seq.samples[key] == par.samples[key]

    def test_paired_channels_across_schemes(self):
        # same trial seed feeds every scheme: identical draw by construction
        s1 = trial_seed(3, 0, 5)
        s2 = trial_seed(3, 0, 5)
        from damlink.channel import channel_set_to_json, generate_channel_set

        cfg = small_cfg()
        assert channel_set_to_json(generate_channel_set(cfg, s1)) == channel_set_to_json(
            generate_channel_set(cfg, s2)
        )

    def test_infeasible_scheme_marked_not_fatal(self):
        # M_t too small for ISI zero-forcing, everything else still runs
        spec = small_spec(config=small_cfg(M_t=4, L=3))
        table = run_experiment(spec)
        by_scheme = {r.scheme: r for r in table.rows if r.sweep_value == 20.0}
        assert by_scheme["dam-isizf"].infeasible
        assert not by_scheme["dam-eigen"].infeasible
        assert np.isfinite(by_scheme["dam-eigen"].mean)

    def test_doubleside_kind(self):
        spec = small_spec(kind="se_vs_power_doubleside", config=small_cfg(M_t=8, M_r=2, L=3))
        table = run_experiment(spec)
        schemes = {r.scheme for r in table.rows}
        assert schemes == {"dam-eigen-auto", "dam-eigen-bs", "dam-eigen-ue", "ofdm-eigen"}
        ue_row = next(r for r in table.rows if r.scheme == "dam-eigen-ue")
        assert ue_row.infeasible  # R = L = 3 > M_r

    def test_fractional_kind(self):
        table = run_experiment(small_spec(kind="se_vs_power_fractional", trials=2))
        by_scheme = {r.scheme: r for r in table.rows if r.sweep_value == 30.0}
        assert np.isfinite(by_scheme["dam-isizf"].mean)
        # fractional residual ISI costs the eigen scheme rate vs OFDM feasibility intact
        assert not by_scheme["ofdm-zf-wf"].infeasible

    def test_papr_kind_smoke(self):
        cfg = small_cfg(M_t=4, M_r=2, K=2, L=2, M=32, G_cp=10, oversample=4)
        spec = ExperimentSpec(kind="papr_ccdf", config=cfg, grid=(30.0,), trials=8, seed=1)
        table = run_experiment(spec)
        assert set(table.ccdf) == {"dam", "ofdm", "strongest-path"}
        for scheme, ccdf in table.ccdf.items():
            assert np.all(np.diff(ccdf) <= 1e-12)
            assert ccdf[0] <= 1.0 and ccdf[-1] >= 0.0


class TestParseConfig:
    def test_empty_config_resolves_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({}))
        spec = parse_config(path, kind="se_vs_power_bsside")
        cfg = spec.config
        assert (cfg.T_ns, cfg.beta, cfg.K, cfg.L) == (5.0, 0.01, 2, 3)
        assert (cfg.P_dbm, cfg.noise_psd_dbm_hz) == (30.0, -174.0)
        assert (cfg.M, cfg.G_c, cfg.G_cp, cfg.G_gi) == (512, 200_000, 100, 200)
        assert cfg.delay_span_samples == 100

    def test_beta_out_of_range(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"system": {"beta": 1.5}}))
        with pytest.raises(ParseError, match="system"):
            parse_config(path, kind="se_vs_power_bsside")

    def test_unknown_key_rejected_with_path(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"system": {"M_x": 4}}))
        with pytest.raises(ParseError, match="system.M_x"):
            parse_config(path, kind="se_vs_power_bsside")

    def test_antenna_override_propagates_to_case_selection(self, tmp_path):
        from damlink.delay_design import choose_compensation_counts

        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"system": {"M_t": 4, "M_r": 64}}))
        spec = parse_config(path, kind="se_vs_power_doubleside")
        choice = choose_compensation_counts(spec.config.M_t, spec.config.M_r, 5)
        assert choice.case == 2

    def test_missing_kind(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({}))
        with pytest.raises(ParseError, match="experiment.kind"):
            parse_config(path)


class TestCli:
    def test_end_to_end_run(self, tmp_path):
        cfg = dict(
            system=dict(M_t=8, M_r=2, K=2, L=2, M=32, delay_span_samples=10,
                        G_cp=10, rho_window=30, g_ls_db=0.0),
            experiment=dict(grid=[30.0], trials=2),
        )
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        code = main(
            ["se_vs_power_bsside", "--config", str(cfg_path), "--seed", "3",
             "--out", str(out)]
        )
        assert code == 0
        csv_text = (tmp_path / "run.csv").read_text()
        assert csv_text.startswith("sweep_value,scheme,mean,stderr,trials")
        sidecar = json.loads((tmp_path / "run.json").read_text())
        assert sidecar["schema_version"] == 1
        assert sidecar["config"]["M_t"] == 8
        assert sidecar["seed"] == 3

    def test_papr_emits_ccdf_csv(self, tmp_path):
        cfg = dict(
            system=dict(M_t=4, M_r=2, K=2, L=2, M=32, delay_span_samples=10,
                        G_cp=10, rho_window=30, g_ls_db=0.0),
        )
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "papr"
        code = main(
            ["papr_ccdf", "--config", str(cfg_path), "--trials", "4", "--out", str(out)]
        )
        assert code == 0
        header = (tmp_path / "papr_ccdf.csv").read_text().splitlines()[0]
        assert header == "threshold_db,ccdf_dam,ccdf_ofdm,ccdf_strongest"

    def test_bad_config_exit_code(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"system": {"beta": 2.0}}))
        assert main(["se_vs_power_bsside", "--config", str(cfg_path)]) == 1
