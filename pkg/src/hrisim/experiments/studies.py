"""
The four studies: identifiability at the pilot bound, validation of the
closed-form errors, the reflection/sensing tradeoff and the SNR sweep against
the reflective baseline.

Each study splits its grid into work units handled by module-level workers, so
that :class:`MonteCarloRunner` can ship them to other processes, and reduces the
returned samples into a :class:`CurveTable` in unit order.

Randomness is keyed so that results don't depend on how the work is split:
user drops by ``(drop,)``, HRIS schedules by ``(drop,)`` or ``(drop, trial)``,
channels by ``(drop, trial)`` and noise by ``(sweep point, trial)``. Channels are
therefore shared by all points of a sweep.
"""
from collections import namedtuple
from typing import Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from hrisim.channel.hris_model import HrisSchedule, make_schedule, rho_profile
from hrisim.channel.scenario import (
    ChannelRealization,
    SeededRng,
    Stream,
    SystemDims,
    draw_channels,
    drop_gains,
    sample_geometry,
)
from hrisim.estimation.baseline import baseline_reflective_cascaded
from hrisim.estimation.estimators import (
    GSource,
    LmmseFilter,
    PriorCovariances,
    closed_mse_g,
    closed_mse_h,
    lmmse_h,
    nmse,
    recover_noiseless,
    squared_error,
)
from hrisim.estimation.pipeline import HrisEstimator
from hrisim.estimation.sounding import (
    NoiseModel,
    assemble_a_bs,
    assemble_a_rc,
    gen_pilots,
    simulate,
)
from hrisim.experiments.curve_table import (
    CurveTable,
    mean_and_stderr,
    median_and_stderr,
    ratio_and_stderr,
)
from hrisim.experiments.runner import MonteCarloRunner, WorkUnit
from hrisim.experiments.spec import ExperimentSpec

PhaseUnit = namedtuple("PhaseUnit", "spec, rho_idx, phase_seed")

#: Above this many unknowns in G the validation study gets slow
VALIDATION_SIZE_WARNING = 256


def _drop_gains(spec: ExperimentSpec, drop: int):
    rng = SeededRng(spec.seed, Stream.DROP).generator(drop)
    return drop_gains(spec.geometry, sample_geometry(spec.dims, spec.geometry, rng))


def _channels(spec: ExperimentSpec, dims: SystemDims, beta, gamma, *key) -> ChannelRealization:
    rng = SeededRng(spec.seed, Stream.CHANNEL).generator(*key)
    return draw_channels(dims, beta, gamma, rng)


def _schedule(spec: ExperimentSpec, dims: SystemDims, *key) -> HrisSchedule:
    return make_schedule(
        dims,
        spec.schedule_mode,
        spec.rho,
        SeededRng(spec.seed, Stream.SCHEDULE).generator(*key),
        rho_policy=spec.rho_policy,
        connectivity=spec.connectivity,
    )


def _noise_rng(spec: ExperimentSpec, *key) -> np.random.Generator:
    return SeededRng(spec.seed, Stream.NOISE).generator(*key)


def _priors(dims: SystemDims, beta, gamma, snr) -> PriorCovariances:
    return PriorCovariances(
        user_gains=gamma, bs_gain=beta, snr=snr, n_elements=dims.N, n_antennas=dims.M
    )


def _unit_bytes(dims: SystemDims) -> int:
    """ Rough working set of one trial, dominated by A_RC and its factorizations """
    return 4 * 16 * dims.tau * dims.N_r * dims.K * dims.N


def _units(spec: ExperimentSpec, n_points: int) -> List[WorkUnit]:
    return [
        WorkUnit(spec, idx, drop) for idx in range(n_points) for drop in range(spec.drops)
    ]


def _as_arrays(samples: Dict[str, list]) -> Dict[str, np.ndarray]:
    return {key: np.asarray(value, dtype=np.float64) for key, value in samples.items()}


def _gather(results: Sequence[dict], n_points: int, drops: int) -> List[Dict[str, np.ndarray]]:
    """ Concatenate the samples of every sweep point over its drops, in drop order """
    gathered = []
    for idx in range(n_points):
        parts = results[idx * drops : (idx + 1) * drops]
        gathered.append(
            {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}
        )
    return gathered


def _runner(spec: ExperimentSpec, desc: str) -> MonteCarloRunner:
    return MonteCarloRunner(
        parallelism=spec.parallelism, unit_bytes=_unit_bytes(spec.dims), desc=desc
    )


def _prop1_unit(unit: WorkUnit) -> Dict[str, np.ndarray]:
    spec = unit.spec
    tau = spec.prop1_taus()[unit.sweep_idx]
    dims = spec.dims.with_tau(tau)
    beta, gamma = _drop_gains(spec, unit.drop)
    pilots = gen_pilots(dims.K, tau, spec.pilot_family)
    noiseless = NoiseModel(pilot_power=spec.pilot_power, sigma2=0.0)
    samples = {
        "identifiable": [],
        "error_G": [],
        "error_H": [],
        "rank_rc": [],
        "rank_bs": [],
    }
    for trial in spec.trials_of(unit.drop):
        schedule = _schedule(spec, dims, unit.drop, trial)
        channels = _channels(spec, dims, beta, gamma, unit.drop, trial)
        recovery = recover_noiseless(simulate(schedule, pilots, channels, noiseless), dims)
        samples["identifiable"].append(float(recovery.identifiable))
        samples["error_G"].append(math.sqrt(nmse(recovery.G_hat, channels.G)))
        samples["error_H"].append(math.sqrt(nmse(recovery.H_hat, channels.H)))
        samples["rank_rc"].append(recovery.rank_rc)
        samples["rank_bs"].append(recovery.rank_bs)
    return _as_arrays(samples)


def run_prop1_check(spec: ExperimentSpec) -> CurveTable:
    """
    Noiseless recovery at, just below and above the pilot bound. Reports the
    identifiability rate, the median and worst relative recovery errors of
    G and H and the mean ranks of both measurement operators.
    """
    taus = spec.prop1_taus()
    logging.info(f"Checking noiseless recovery with tau in {taus}.")
    results = _runner(spec, "Noiseless recovery").map(_prop1_unit, _units(spec, len(taus)))
    table = CurveTable()
    for tau, samples in zip(taus, _gather(results, len(taus), spec.drops)):
        summaries = {
            "identifiable_rate": mean_and_stderr(samples["identifiable"]),
            "median_error_G": median_and_stderr(samples["error_G"]),
            "median_error_H": median_and_stderr(samples["error_H"]),
            "max_error_G": (float(np.max(samples["error_G"])), 0.0),
            "max_error_H": (float(np.max(samples["error_H"])), 0.0),
            "rank_rc": mean_and_stderr(samples["rank_rc"]),
            "rank_bs": mean_and_stderr(samples["rank_bs"]),
        }
        for metric, (mean, stderr) in summaries.items():
            table.add_value("prop1", "tau", tau, metric, mean, stderr, spec.trials, spec.seed)
    return table


def _validation_unit(unit: WorkUnit) -> Dict[str, np.ndarray]:
    spec = unit.spec
    dims = spec.dims
    noise = spec.noise_at(spec.snr_db[unit.sweep_idx])
    beta, gamma = _drop_gains(spec, unit.drop)
    estimator = HrisEstimator(
        priors=_priors(dims, beta, gamma, noise.snr), noise=noise, g_source=GSource.TRUE
    )
    schedule = _schedule(spec, dims, unit.drop)
    pilots = gen_pilots(dims.K, dims.tau, spec.pilot_family)
    prior_g = dims.N * float(np.sum(gamma))
    prior_h = dims.M * dims.N * beta
    samples: Dict[str, list] = {
        key: []
        for key in (
            "err_G", "energy_G", "closed_G", "prior_G",
            "err_H", "energy_H", "closed_H", "prior_H", "err_H_est",
        )
    }
    for trial in spec.trials_of(unit.drop):
        channels = _channels(spec, dims, beta, gamma, unit.drop, trial)
        record = simulate(
            schedule, pilots, channels, noise, _noise_rng(spec, unit.sweep_idx, trial)
        )
        report = estimator.run(record, channels)
        err_g, energy_g = squared_error(report.G_hat, channels.G)
        err_h, energy_h = squared_error(report.H_hat, channels.H)
        h_from_estimate = lmmse_h(
            record, estimator.bs_priors, GSource.ESTIMATED, G_hat=report.G_hat
        )
        samples["err_G"].append(err_g)
        samples["energy_G"].append(energy_g)
        samples["closed_G"].append(report.closed_mse_G)
        samples["prior_G"].append(prior_g)
        samples["err_H"].append(err_h)
        samples["energy_H"].append(energy_h)
        samples["closed_H"].append(report.closed_mse_H)
        samples["prior_H"].append(prior_h)
        samples["err_H_est"].append(squared_error(h_from_estimate, channels.H)[0])
    return _as_arrays(samples)


def _validation_rows(table, spec, snr_db, samples, channel, err_key):
    err = samples[err_key]
    closed = samples[f"closed_{channel}"]
    closed_mean = float(np.mean(closed))
    suffix = "" if err_key == f"err_{channel}" else "_from_estimated_G"
    rows = {
        f"mse_{channel}{suffix}": mean_and_stderr(err),
        f"nmse_{channel}{suffix}": ratio_and_stderr(err, samples[f"energy_{channel}"]),
    }
    if not suffix:
        _, err_stderr = mean_and_stderr(err)
        rows[f"closed_mse_{channel}"] = mean_and_stderr(closed)
        rows[f"closed_nmse_{channel}"] = (
            closed_mean / float(np.mean(samples[f"prior_{channel}"])),
            0.0,
        )
        rows[f"mse_ratio_{channel}"] = (
            float(np.mean(err)) / closed_mean,
            err_stderr / closed_mean,
        )
    for metric, (mean, stderr) in rows.items():
        table.add_value("validate", "snr_db", snr_db, metric, mean, stderr, spec.trials, spec.seed)


def run_closed_form_validation(spec: ExperimentSpec) -> CurveTable:
    """
    Empirical LMMSE errors against the closed-form traces along the SNR grid.
    H is estimated with A_BS built from the true G, as the closed form assumes,
    and also from the estimate of G.
    """
    dims = spec.dims
    if dims.K * dims.N > VALIDATION_SIZE_WARNING:
        logging.warning(
            f"Validating with K N = {dims.K * dims.N} unknowns in G, this may take a while."
        )
    n_points = spec.snr_db.size
    results = _runner(spec, "Validation").map(_validation_unit, _units(spec, n_points))
    table = CurveTable()
    for snr_db, samples in zip(spec.snr_db, _gather(results, n_points, spec.drops)):
        _validation_rows(table, spec, snr_db, samples, "G", "err_G")
        _validation_rows(table, spec, snr_db, samples, "H", "err_H")
        _validation_rows(table, spec, snr_db, samples, "H", "err_H_est")
    return table


def _tradeoff_unit(unit: PhaseUnit) -> Dict[str, np.ndarray]:
    spec = unit.spec
    dims = spec.dims
    rho = spec.rho_grid[unit.rho_idx]
    noise = spec.noise_at(spec.fixed_snr_db)
    beta, gamma = _drop_gains(spec, 0)
    phases = make_schedule(
        dims,
        spec.schedule_mode,
        spec.rho,
        SeededRng(spec.seed, Stream.PHASES).generator(unit.phase_seed),
        rho_policy=spec.rho_policy,
        connectivity=spec.connectivity,
    )
    schedule = phases.with_rho(rho_profile(dims.N, rho, spec.rho_policy))
    pilots = gen_pilots(dims.K, dims.tau, spec.pilot_family)
    channels = _channels(spec, dims, beta, gamma, 0, unit.phase_seed)
    priors = _priors(dims, beta, gamma, noise.snr)
    hris_priors = priors.with_snr(noise.snr_sensing)
    bs_priors = priors.with_snr(noise.snr_bs)
    a_rc = assemble_a_rc(schedule, pilots)
    a_bs = assemble_a_bs(schedule, pilots, channels.G)
    samples = {
        "closed_nmse_G": [closed_mse_g(a_rc, hris_priors).normalized],
        "closed_nmse_H": [closed_mse_h(a_bs, bs_priors).normalized],
    }
    if spec.empirical_overlay:
        g_filter = LmmseFilter(a_rc=a_rc, priors=hris_priors)
        prior_g = dims.N * float(np.sum(gamma))
        prior_h = dims.M * dims.N * beta
        samples["empirical_nmse_G"] = []
        samples["empirical_nmse_H"] = []
        for trial in range(spec.trials):
            fresh = _channels(spec, dims, beta, gamma, 0, unit.phase_seed, trial)
            # the H closed form is conditioned on the G of this phase seed
            held = ChannelRealization(H=fresh.H, G=channels.G, beta=beta, gamma=gamma)
            rng = _noise_rng(spec, unit.rho_idx, unit.phase_seed, trial)
            record_g = simulate(schedule, pilots, fresh, noise, rng)
            record_h = simulate(schedule, pilots, held, noise, rng)
            G_hat = g_filter.apply(record_g)
            H_hat = lmmse_h(record_h, bs_priors, GSource.TRUE)
            samples["empirical_nmse_G"].append(squared_error(G_hat, fresh.G)[0] / prior_g)
            samples["empirical_nmse_H"].append(squared_error(H_hat, fresh.H)[0] / prior_h)
    return _as_arrays(samples)


def run_tradeoff(spec: ExperimentSpec) -> CurveTable:
    """
    Normalized closed-form errors of G at the HRIS and H at the BS along the rho
    grid, one curve per random phase configuration. The phases and channels of a
    curve are fixed; only the amplitude split changes along it.
    """
    units = [
        PhaseUnit(spec, rho_idx, seed)
        for rho_idx in range(spec.rho_grid.size)
        for seed in range(spec.phase_seeds)
    ]
    results = _runner(spec, "Tradeoff").map(_tradeoff_unit, units)
    table = CurveTable()
    for unit, samples in zip(units, results):
        rho = spec.rho_grid[unit.rho_idx]
        for metric, values in samples.items():
            if metric.startswith("closed"):
                mean, stderr, trials = float(values[0]), 0.0, 1
            else:
                (mean, stderr), trials = mean_and_stderr(values), values.size
            table.add_value(
                "tradeoff",
                "rho",
                rho,
                f"{metric}/phase_seed_{unit.phase_seed}",
                mean,
                stderr,
                trials,
                spec.seed,
            )
    return table


def _snr_sweep_unit(unit: WorkUnit) -> Dict[str, np.ndarray]:
    spec = unit.spec
    dims = spec.dims
    noise = spec.noise_at(spec.snr_db[unit.sweep_idx])
    beta, gamma = _drop_gains(spec, unit.drop)
    estimator = HrisEstimator(
        priors=_priors(dims, beta, gamma, noise.snr), noise=noise, g_source=spec.g_source
    )
    schedule = _schedule(spec, dims, unit.drop)
    pilots = gen_pilots(dims.K, dims.tau, spec.pilot_family)
    baseline_rng = SeededRng(spec.seed, Stream.BASELINE)
    samples: Dict[str, list] = {
        key: []
        for key in (
            "err_C", "energy_C", "err_G", "energy_G",
            "err_H", "energy_H", "err_baseline", "regularized",
        )
    }
    for trial in spec.trials_of(unit.drop):
        channels = _channels(spec, dims, beta, gamma, unit.drop, trial)
        cascaded = channels.cascaded()
        record = simulate(
            schedule, pilots, channels, noise, _noise_rng(spec, unit.sweep_idx, trial)
        )
        G_hat, H_hat, C_hat = estimator.estimate(record)
        baseline = baseline_reflective_cascaded(
            channels,
            dims.tau,
            noise,
            baseline_rng.generator(unit.sweep_idx, trial),
            pilots=pilots,
        )
        for name, estimate, truth in (
            ("C", C_hat, cascaded),
            ("G", G_hat, channels.G),
            ("H", H_hat, channels.H),
        ):
            err, energy = squared_error(estimate, truth)
            samples[f"err_{name}"].append(err)
            samples[f"energy_{name}"].append(energy)
        samples["err_baseline"].append(squared_error(baseline.C_hat, cascaded)[0])
        samples["regularized"].append(float(np.any(baseline.regularized)))
    return _as_arrays(samples)


def crossing_snr(snr_db: np.ndarray, curve: np.ndarray, level: float) -> Optional[float]:
    """
    SNR from which an NMSE curve stays at or below ``level``, interpolating
    log10(NMSE) linearly in dB between the last grid point above the level and
    the next one. Dips of a noisy curve below the level before that point are
    ignored. ``None`` when the grid doesn't bracket the level.
    """
    order = np.argsort(snr_db)
    snr_db = np.asarray(snr_db, dtype=np.float64)[order]
    with np.errstate(divide="ignore"):
        log_curve = np.log10(np.asarray(curve, dtype=np.float64)[order])
    target = math.log10(level)
    above = np.flatnonzero(log_curve > target)
    if above.size == 0 or above[-1] == log_curve.size - 1:
        return None
    idx = above[-1]
    x0, x1 = snr_db[idx], snr_db[idx + 1]
    y0, y1 = log_curve[idx], log_curve[idx + 1]
    if not np.isfinite(y1):
        return float(x1)
    return float(x0 + (target - y0) * (x1 - x0) / (y1 - y0))


def horizontal_gain(
    snr_db: np.ndarray, reference: np.ndarray, improved: np.ndarray, level: float
) -> Optional[float]:
    """ SNR saved by ``improved`` over ``reference`` at a given NMSE level, in dB """
    snr_reference = crossing_snr(snr_db, reference, level)
    snr_improved = crossing_snr(snr_db, improved, level)
    if snr_reference is None or snr_improved is None:
        return None
    return snr_reference - snr_improved


def run_snr_sweep(spec: ExperimentSpec) -> CurveTable:
    """
    Cascaded channel NMSE of the HRIS pipeline and of the reflective baseline
    along the SNR grid, with the horizontal SNR gain of the HRIS at each
    configured NMSE level.
    """
    n_points = spec.snr_db.size
    results = _runner(spec, "SNR sweep").map(_snr_sweep_unit, _units(spec, n_points))
    table = CurveTable()
    hris_curve, baseline_curve = [], []
    for snr_db, samples in zip(spec.snr_db, _gather(results, n_points, spec.drops)):
        summaries = {
            "nmse_C/hris": ratio_and_stderr(samples["err_C"], samples["energy_C"]),
            "nmse_C/baseline": ratio_and_stderr(samples["err_baseline"], samples["energy_C"]),
            "nmse_G/hris": ratio_and_stderr(samples["err_G"], samples["energy_G"]),
            "nmse_H/hris": ratio_and_stderr(samples["err_H"], samples["energy_H"]),
            # per-trial medians, robust to the heavy tail of the baseline
            "median_nmse_C/hris": median_and_stderr(samples["err_C"] / samples["energy_C"]),
            "median_nmse_C/baseline": median_and_stderr(
                samples["err_baseline"] / samples["energy_C"]
            ),
            "regularized_rate/baseline": mean_and_stderr(samples["regularized"]),
        }
        hris_curve.append(summaries["nmse_C/hris"][0])
        baseline_curve.append(summaries["nmse_C/baseline"][0])
        for metric, (mean, stderr) in summaries.items():
            table.add_value("snr-sweep", "snr_db", snr_db, metric, mean, stderr, spec.trials, spec.seed)
    for level in spec.gain_levels:
        gain = horizontal_gain(spec.snr_db, np.array(baseline_curve), np.array(hris_curve), level)
        if gain is None:
            logging.warning(
                f"NMSE level {level:g} isn't reached by both curves within the SNR grid, "
                "skipping its SNR gain."
            )
            continue
        logging.info(f"HRIS SNR gain at NMSE {level:g}: {gain:.2f} dB.")
        table.add_value("snr-sweep", "nmse_level", level, "snr_gain_db", gain, 0.0, spec.trials, spec.seed)
    return table


STUDIES = {
    "prop1": run_prop1_check,
    "validate": run_closed_form_validation,
    "tradeoff": run_tradeoff,
    "snr-sweep": run_snr_sweep,
}


def run_study(spec: ExperimentSpec) -> CurveTable:
    try:
        study = STUDIES[spec.study]
    except KeyError:
        raise ValueError(f"Unknown study '{spec.study}'.") from None
    logging.info(f"Running study {spec.study} with {spec.trials} trials, seed {spec.seed}.")
    return study(spec)
