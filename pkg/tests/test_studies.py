import logging

import attr
import numpy as np
import pytest

from hrisim.channel.scenario import SystemDims
from hrisim.config.config_parser import Config
from hrisim.experiments.spec import ExperimentSpec
from hrisim.experiments.studies import (
    crossing_snr,
    horizontal_gain,
    run_closed_form_validation,
    run_prop1_check,
    run_snr_sweep,
    run_study,
    run_tradeoff,
)

SMALL = SystemDims(M=4, N=8, N_r=2, K=2, tau=16)


def small_spec(study, **kwargs):
    settings = dict(
        study=study,
        dims=SMALL,
        snr_db=[0.0, 10.0, 20.0],
        fixed_snr_db=30.0,
        snr_offset_db=60.0,
        trials=20,
        drops=2,
        seed=7,
        parallelism="strict",
    )
    settings.update(kwargs)
    return ExperimentSpec(**settings)


def by_metric(table, metric):
    curve = table.curve(metric)
    return dict(zip(curve["sweep_value"], curve["mean"]))


class TestExperimentSpec:
    def test_study_defaults(self):
        spec = ExperimentSpec.from_config(Config.default().config_data)
        assert spec.study == "snr-sweep"
        assert spec.dims.tau == 100
        assert spec.trials == 2000
        assert spec.drops == 10

    @pytest.mark.parametrize(
        "study,tau,trials", [("prop1", 64, 20), ("validate", 128, 5000), ("tradeoff", 70, 200)]
    )
    def test_resolved_tau(self, study, tau, trials):
        config = Config.default().merge({"study": study})
        spec = ExperimentSpec.from_config(config.config_data)
        assert spec.dims.tau == tau
        assert spec.trials == trials

    def test_prop1_lengths(self):
        spec = ExperimentSpec.from_config(Config.default().merge({"study": "prop1"}).config_data)
        assert spec.prop1_taus() == (63, 64, 72)

    def test_explicit_tau(self, small_cfg):
        config = Config.from_disk(small_cfg).merge({"system": {"tau": 12}})
        spec = ExperimentSpec.from_config(config.config_data)
        assert spec.prop1_taus() == (12,)

    def test_drops_clamped(self):
        assert small_spec("validate", trials=3, drops=10).drops == 3

    def test_trials_split_over_drops(self):
        spec = small_spec("validate", trials=7, drops=3)
        trials = sorted(t for drop in range(3) for t in spec.trials_of(drop))
        assert trials == list(range(7))

    def test_noise_offset(self):
        noise = small_spec("validate").noise_at(10.0)
        assert noise.snr == pytest.approx(1e7)

    def test_no_trials(self):
        with pytest.raises(ValueError):
            small_spec("validate", trials=0)


class TestProp1:
    def test_small_bound(self, small_cfg):
        spec = ExperimentSpec.from_config(Config.from_disk(small_cfg).config_data)
        assert spec.prop1_taus() == (7, 8, 16)
        table = run_prop1_check(spec)
        rate = by_metric(table, "identifiable_rate")
        assert rate == {7.0: 0.0, 8.0: 1.0, 16.0: 1.0}
        error_g = by_metric(table, "median_error_G")
        error_h = by_metric(table, "median_error_H")
        assert error_g[8.0] < 1e-8
        assert error_h[8.0] < 1e-6
        assert by_metric(table, "rank_rc")[7.0] < 16

    def test_full_size_bound(self):
        spec = ExperimentSpec(
            study="prop1",
            dims=SystemDims(M=16, N=64, N_r=8, K=8, tau=64),
            trials=20,
            drops=1,
            seed=2021,
            parallelism="strict",
            tau_from_bound=True,
        )
        table = run_prop1_check(spec)
        rate = by_metric(table, "identifiable_rate")
        assert rate[63.0] == 0.0
        assert rate[64.0] == rate[72.0] == 1.0
        assert by_metric(table, "rank_rc")[63.0] <= 63 * 8
        for tau in (64.0, 72.0):
            assert by_metric(table, "max_error_G")[tau] <= 1e-8
            assert by_metric(table, "max_error_H")[tau] <= 1e-8


class TestValidation:
    def test_closed_forms_hold(self):
        # offset puts both channels well inside the informative regime
        spec = small_spec("validate", trials=5000, drops=5, snr_offset_db=110.0)
        table = run_closed_form_validation(spec)
        for channel in ("G", "H"):
            ratio = table.curve(f"mse_ratio_{channel}")
            np.testing.assert_allclose(ratio["mean"], 1.0, atol=0.03)
            assert (ratio["stderr"] > 0).all()
            closed = by_metric(table, f"closed_nmse_{channel}")
            assert closed[0.0] > closed[10.0] > closed[20.0]
            assert closed[0.0] < 0.5
        assert by_metric(table, "closed_nmse_H")[20.0] < 0.05


class TestTradeoff:
    RHOS = [0.1, 0.3, 0.5, 0.7, 0.9]

    def test_opposite_trends(self):
        spec = small_spec("tradeoff", rho_grid=self.RHOS, phase_seeds=2)
        table = run_tradeoff(spec)
        for seed in range(2):
            nmse_g = table.curve(f"closed_nmse_G/phase_seed_{seed}")["mean"].to_numpy()
            nmse_h = table.curve(f"closed_nmse_H/phase_seed_{seed}")["mean"].to_numpy()
            assert np.all(np.diff(nmse_g) > 0)
            assert np.all(np.diff(nmse_h) < 0)
            assert np.all((nmse_g > 0) & (nmse_g < 1))

    def test_pure_reflection_senses_nothing(self):
        spec = small_spec("tradeoff", rho_grid=[0.0, 1.0], phase_seeds=1)
        table = run_tradeoff(spec)
        assert by_metric(table, "closed_nmse_G/phase_seed_0")[1.0] == pytest.approx(1.0)
        assert by_metric(table, "closed_nmse_H/phase_seed_0")[0.0] == pytest.approx(1.0)

    def test_diminishing_returns_at_full_size(self):
        spec = small_spec(
            "tradeoff",
            dims=SystemDims(M=16, N=64, N_r=8, K=8, tau=70),
            rho_grid=[0.1, 0.5, 0.9],
            phase_seeds=2,
            snr_offset_db=70.0,
            drops=1,
        )
        table = run_tradeoff(spec)
        for seed in range(2):
            nmse_h = table.curve(f"closed_nmse_H/phase_seed_{seed}")["mean"].to_numpy()
            assert nmse_h[0] - nmse_h[1] > nmse_h[1] - nmse_h[2] > 0

    def test_empirical_overlay(self):
        spec = small_spec(
            "tradeoff", rho_grid=[0.5], phase_seeds=1, trials=400, empirical_overlay=True
        )
        table = run_tradeoff(spec)
        for channel in ("G", "H"):
            closed = by_metric(table, f"closed_nmse_{channel}/phase_seed_0")[0.5]
            empirical = by_metric(table, f"empirical_nmse_{channel}/phase_seed_0")[0.5]
            assert empirical == pytest.approx(closed, rel=0.15)


class TestSnrSweep:
    def test_hris_beats_baseline_at_low_snr(self, caplog):
        spec = small_spec("snr-sweep", snr_offset_db=0.0)
        with caplog.at_level(logging.WARNING):
            table = run_snr_sweep(spec)
        hris = by_metric(table, "nmse_C/hris")
        baseline = by_metric(table, "nmse_C/baseline")
        for snr in (0.0, 10.0, 20.0):
            assert hris[snr] < baseline[snr]
        assert "snr_gain_db" not in table.metrics()
        assert "skipping its SNR gain" in caplog.text

    def test_curves_fall_with_snr(self):
        table = run_snr_sweep(small_spec("snr-sweep", snr_offset_db=100.0))
        for metric in ("nmse_C/hris", "nmse_G/hris", "nmse_H/hris"):
            curve = table.curve(metric)["mean"].to_numpy()
            assert np.all(np.diff(curve) < 0)
        rate = table.curve("regularized_rate/baseline")["mean"]
        assert ((rate >= 0) & (rate <= 1)).all()


class TestCalibratedSweep:
    def test_full_size_gain(self, tmp_path, monkeypatch):
        monkeypatch.setattr(
            "hrisim.config.config_parser.user_config_dir", lambda app: str(tmp_path)
        )
        config = Config.from_path_or_name("calibrated_sweep").merge(
            {"experiment": {"trials": 40, "drops": 2}, "output": {"parallelism": "strict"}}
        )
        spec = ExperimentSpec.from_config(config.config_data)
        assert spec.dims == SystemDims(M=16, N=64, N_r=8, K=8, tau=100)
        table = run_snr_sweep(spec)
        hris = by_metric(table, "nmse_C/hris")
        baseline = by_metric(table, "nmse_C/baseline")
        assert len(hris) == 17
        for snr in hris:
            assert hris[snr] < baseline[snr]
        assert by_metric(table, "snr_gain_db")[0.01] >= 10.0
        median_hris = by_metric(table, "median_nmse_C/hris")
        median_baseline = by_metric(table, "median_nmse_C/baseline")
        assert all(median_hris[snr] < median_baseline[snr] for snr in hris)


class TestSnrGain:
    SNR = np.arange(0.0, 31.0, 2.0)

    def test_exponential_crossing(self):
        assert crossing_snr(self.SNR, 10 ** (-self.SNR / 10), 1e-2) == pytest.approx(20.0)

    def test_interpolated_crossing(self):
        assert crossing_snr(self.SNR, 10 ** (-self.SNR / 10), 10 ** -1.5) == pytest.approx(15.0)

    def test_shifted_curve(self):
        reference = 10 ** (-self.SNR / 10)
        improved = 10 ** (-(self.SNR + 10) / 10)
        assert horizontal_gain(self.SNR, reference, improved, 1e-2) == pytest.approx(10.0)

    def test_last_crossing_of_noisy_curve(self):
        snr = np.array([0.0, 10.0, 20.0, 30.0, 40.0])
        curve = 10.0 ** np.array([0.0, -3.0, 0.0, -1.0, -3.0])
        assert crossing_snr(snr, curve, 1e-2) == pytest.approx(35.0)

    def test_unbracketed(self):
        curve = 10 ** (-self.SNR / 10)
        assert crossing_snr(self.SNR, curve, 1e-5) is None
        assert crossing_snr(self.SNR, curve, 2.0) is None
        assert horizontal_gain(self.SNR, curve, curve, 1e-5) is None


class TestReproducibility:
    def test_same_seed_same_table(self):
        spec = small_spec("validate", snr_db=[10.0], trials=10)
        assert run_study(spec).to_records() == run_study(spec).to_records()

    def test_other_seed_other_table(self):
        spec = small_spec("validate", snr_db=[10.0], trials=10)
        other = attr.evolve(spec, seed=8)
        assert run_study(spec).to_records() != run_study(other).to_records()

    def test_parallel_matches_sequential(self):
        spec = small_spec("snr-sweep", trials=6, drops=3)
        parallel = attr.evolve(spec, parallelism="2")
        assert run_study(spec).to_records() == run_study(parallel).to_records()

    def test_unknown_study(self):
        with pytest.raises(ValueError):
            run_study(small_spec("nope"))
