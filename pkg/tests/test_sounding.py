from unittest import TestCase

import numpy as np
import pytest

from hrisim.channel.hris_model import ScheduleMode, build_phi, build_psi, make_schedule
from hrisim.channel.scenario import draw_channels
from hrisim.estimation.sounding import (
    NoiseModel,
    PilotFamily,
    assemble_a_bs,
    assemble_a_rc,
    gen_pilots,
    simulate,
)
from hrisim.linalg.numkernel import kron, vec


class TestPilots:
    @pytest.mark.parametrize("family", [PilotFamily.DFT, PilotFamily.HADAMARD])
    def test_orthogonal_rows(self, family):
        S = gen_pilots(3, 8, family).S
        np.testing.assert_allclose(S @ S.conj().T, 8 * np.eye(3), atol=1e-10)
        np.testing.assert_allclose(np.abs(S), np.ones((3, 8)))

    def test_dft_first_row_is_ones(self):
        np.testing.assert_allclose(gen_pilots(2, 5).S[0], np.ones(5))

    def test_too_short(self):
        with pytest.raises(ValueError):
            gen_pilots(4, 3)

    def test_hadamard_length(self):
        with pytest.raises(ValueError):
            gen_pilots(2, 6, PilotFamily.HADAMARD)


class TestNoiseModel(TestCase):
    def test_from_snr_db(self):
        noise = NoiseModel.from_snr_db(20.0, pilot_power=2.0)
        self.assertAlmostEqual(noise.sigma2, 0.02)
        self.assertAlmostEqual(noise.snr, 100.0)
        self.assertEqual(noise.sigma2_r, noise.sigma2_b)

    def test_scales(self):
        noise = NoiseModel.from_snr_db(10.0, sensing_scale=2.0, bs_scale=0.5)
        self.assertAlmostEqual(noise.snr_sensing, 5.0)
        self.assertAlmostEqual(noise.snr_bs, 20.0)

    def test_noiseless_snr(self):
        self.assertEqual(NoiseModel(sigma2=0.0).snr, np.inf)

    def test_negative_power(self):
        with self.assertRaises(ValueError):
            NoiseModel(pilot_power=-1.0)


class TestSimulate:
    @pytest.fixture
    def setup(self, small_dims, unit_channels):
        schedule = make_schedule(
            small_dims, ScheduleMode.RANDOM, 0.4, np.random.default_rng(21)
        )
        pilots = gen_pilots(small_dims.K, small_dims.tau)
        return schedule, pilots, unit_channels

    def test_sensed_observations(self, setup):
        schedule, pilots, channels = setup
        noise = NoiseModel(pilot_power=4.0, sigma2=0.0)
        record = simulate(schedule, pilots, channels, noise)
        np.testing.assert_allclose(
            record.y_rc, 2.0 * record.a_rc @ vec(channels.G), rtol=1e-10, atol=1e-12
        )

    def test_reflected_observations(self, setup):
        schedule, pilots, channels = setup
        noise = NoiseModel(pilot_power=4.0, sigma2=0.0)
        record = simulate(schedule, pilots, channels, noise)
        operator = kron(record.a_bs, np.eye(channels.H.shape[0]))
        np.testing.assert_allclose(
            record.y_bs, 2.0 * operator @ vec(channels.H), rtol=1e-10, atol=1e-12
        )

    def test_instance_by_instance(self, setup):
        schedule, pilots, channels = setup
        record = simulate(schedule, pilots, channels, NoiseModel(sigma2=0.0))
        n_chains, n_antennas = schedule.connect.shape[0], channels.H.shape[0]
        for inst, snapshot in enumerate(schedule):
            r = channels.G @ pilots.S[:, inst]
            np.testing.assert_allclose(
                record.y_rc[inst * n_chains : (inst + 1) * n_chains],
                build_phi(snapshot) @ r,
                atol=1e-12,
            )
            np.testing.assert_allclose(
                record.y_bs[inst * n_antennas : (inst + 1) * n_antennas],
                channels.H @ build_psi(snapshot) @ r,
                atol=1e-12,
            )

    def test_operators_shapes(self, setup, small_dims):
        schedule, pilots, channels = setup
        a_rc = assemble_a_rc(schedule, pilots)
        a_bs = assemble_a_bs(schedule, pilots, channels.G)
        assert a_rc.shape == (small_dims.tau * small_dims.N_r, small_dims.K * small_dims.N)
        assert a_bs.shape == (small_dims.tau, small_dims.N)

    def test_a_bs_for_true_g(self, setup):
        schedule, pilots, channels = setup
        record = simulate(schedule, pilots, channels, NoiseModel(sigma2=0.0))
        np.testing.assert_allclose(record.a_bs_for(channels.G), record.a_bs)

    def test_noise_needs_generator(self, setup):
        schedule, pilots, channels = setup
        with pytest.raises(ValueError):
            simulate(schedule, pilots, channels, NoiseModel(sigma2=1.0))

    def test_noise_level(self, small_dims):
        dims = small_dims.with_tau(2000)
        schedule = make_schedule(dims, ScheduleMode.RANDOM, 0.5, np.random.default_rng(1))
        channels = draw_channels(dims, 0.0, np.zeros(dims.K), np.random.default_rng(2))
        record = simulate(
            schedule,
            gen_pilots(dims.K, dims.tau),
            channels,
            NoiseModel(sigma2=0.5),
            np.random.default_rng(3),
        )
        assert np.mean(np.abs(record.y_bs) ** 2) == pytest.approx(0.5, rel=0.05)
        assert np.mean(np.abs(record.y_rc) ** 2) == pytest.approx(0.5, rel=0.05)

    def test_length_mismatch(self, setup):
        schedule, _, channels = setup
        with pytest.raises(ValueError):
            simulate(schedule, gen_pilots(2, 5), channels, NoiseModel(sigma2=0.0))


class TestOperatorLimits:
    def test_two_point_dft(self):
        np.testing.assert_allclose(gen_pilots(2, 2).S, [[1, 1], [1, -1]], atol=1e-15)

    @pytest.mark.parametrize("rho", [0.0, 1.0])
    def test_one_path_vanishes(self, small_dims, unit_channels, rho):
        schedule = make_schedule(small_dims, ScheduleMode.RANDOM, rho, np.random.default_rng(0))
        pilots = gen_pilots(small_dims.K, small_dims.tau)
        vanished = (
            assemble_a_rc(schedule, pilots)
            if rho == 1.0
            else assemble_a_bs(schedule, pilots, unit_channels.G)
        )
        assert np.count_nonzero(vanished) == 0
