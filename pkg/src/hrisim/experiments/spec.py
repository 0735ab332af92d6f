"""
Immutable description of a study, resolved from a validated configuration.
"""
from typing import Any, MutableMapping, Tuple

import attr
from attr.validators import instance_of
import numpy as np

from hrisim.channel.hris_model import Connectivity, RhoPolicy, ScheduleMode
from hrisim.channel.scenario import SystemDims, SystemGeometry
from hrisim.estimation.estimators import GSource, min_pilots
from hrisim.estimation.sounding import NoiseModel, PilotFamily

#: Pilot length used when ``system.tau`` is 0
DEFAULT_TAU = {"tradeoff": 70, "snr-sweep": 100}
#: Trial count used when ``experiment.trials`` is 0
DEFAULT_TRIALS = {"prop1": 20, "validate": 5000, "tradeoff": 200, "snr-sweep": 2000}
#: Pilot lengths checked around the bound
PROP1_OFFSETS = (-1, 0, 8)


def _float_array(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=np.float64))


def _resolve_tau(study: str, system: MutableMapping[str, Any]) -> int:
    if system["tau"] > 0:
        return system["tau"]
    bound = max(system["N"], -(-system["N"] * system["K"] // system["N_r"]))
    if study == "prop1":
        return bound
    if study == "validate":
        return 2 * bound
    return DEFAULT_TAU[study]


@attr.s(frozen=True, slots=True)
class ExperimentSpec:
    """
    Everything a study needs, with study defaults filled in.

    :param str study: One of prop1, validate, tradeoff, snr-sweep
    :param SystemDims dims: Problem sizes, ``tau`` resolved
    :param SystemGeometry geometry: Node placement and pathloss
    :param np.ndarray snr_db: Nominal SNR grid in dB
    :param float snr_offset_db: Added to every SNR before forming Gamma
    :param int trials: Trials per grid point
    :param int drops: User drops the trials are spread over
    :param int seed: Root seed
    :param bool tau_from_bound: Whether prop1 checks the lengths around the bound
    """

    study = attr.ib(validator=instance_of(str))
    dims = attr.ib(validator=instance_of(SystemDims))
    geometry = attr.ib(factory=SystemGeometry, validator=instance_of(SystemGeometry))
    schedule_mode = attr.ib(default=ScheduleMode.RANDOM, converter=ScheduleMode)
    connectivity = attr.ib(default=Connectivity.FULL, converter=Connectivity)
    rho = attr.ib(default=0.5, converter=float)
    rho_policy = attr.ib(default=RhoPolicy.UNIFORM, converter=RhoPolicy)
    snr_db = attr.ib(factory=lambda: np.arange(0.0, 31.0, 2.0), converter=_float_array)
    fixed_snr_db = attr.ib(default=30.0, converter=float)
    snr_offset_db = attr.ib(default=0.0, converter=float)
    pilot_power = attr.ib(default=1.0, converter=float)
    sensing_noise_scale = attr.ib(default=1.0, converter=float)
    bs_noise_scale = attr.ib(default=1.0, converter=float)
    pilot_family = attr.ib(default=PilotFamily.DFT, converter=PilotFamily)
    trials = attr.ib(default=100, validator=instance_of(int))
    drops = attr.ib(default=1, validator=instance_of(int))
    seed = attr.ib(default=0, validator=instance_of(int))
    rho_grid = attr.ib(factory=lambda: np.linspace(0.1, 0.9, 9), converter=_float_array)
    phase_seeds = attr.ib(default=5, validator=instance_of(int))
    empirical_overlay = attr.ib(default=False, validator=instance_of(bool))
    g_source = attr.ib(default=GSource.ESTIMATED, converter=GSource)
    gain_levels = attr.ib(factory=lambda: np.array([1e-2]), converter=_float_array)
    parallelism = attr.ib(default="auto", converter=str)
    tau_from_bound = attr.ib(default=False, validator=instance_of(bool))

    def __attrs_post_init__(self):
        if self.trials < 1:
            raise ValueError("At least one trial is needed.")
        if self.drops < 1:
            raise ValueError("At least one drop is needed.")
        if self.snr_db.size == 0 or self.rho_grid.size == 0:
            raise ValueError("Sweep grids can't be empty.")
        # every drop must hold at least one trial
        object.__setattr__(self, "drops", min(self.drops, self.trials))

    @classmethod
    def from_config(cls, config: MutableMapping[str, Any]) -> "ExperimentSpec":
        """
        :param dict config: Complete, verified configuration document
        """
        study = config["study"]
        system, geometry = config["system"], config["geometry"]
        hris, noise = config["hris"], config["noise"]
        experiment = config["experiment"]
        dims = SystemDims(
            M=system["M"],
            N=system["N"],
            N_r=system["N_r"],
            K=system["K"],
            tau=_resolve_tau(study, system),
        )
        return cls(
            study=study,
            dims=dims,
            geometry=SystemGeometry(**geometry),
            schedule_mode=hris["schedule_mode"],
            connectivity=hris["connectivity"],
            rho=hris["rho"],
            rho_policy=hris["rho_policy"],
            snr_db=noise["snr_db"],
            fixed_snr_db=noise["fixed_snr_db"],
            snr_offset_db=noise["snr_offset_db"],
            pilot_power=noise["pilot_power"],
            sensing_noise_scale=noise["sensing_noise_scale"],
            bs_noise_scale=noise["bs_noise_scale"],
            pilot_family=noise["pilot_family"],
            trials=experiment["trials"] or DEFAULT_TRIALS[study],
            drops=experiment["drops"],
            seed=experiment["seed"],
            rho_grid=experiment["rho_grid"],
            phase_seeds=experiment["phase_seeds"],
            empirical_overlay=experiment["empirical_overlay"],
            g_source=experiment["lmmse_h_source"],
            gain_levels=experiment["gain_levels"],
            parallelism=config["output"]["parallelism"],
            tau_from_bound=system["tau"] == 0,
        )

    def noise_at(self, snr_db: float) -> NoiseModel:
        """ Noise model at a nominal SNR, the calibration offset applied """
        return NoiseModel.from_snr_db(
            snr_db + self.snr_offset_db,
            pilot_power=self.pilot_power,
            sensing_scale=self.sensing_noise_scale,
            bs_scale=self.bs_noise_scale,
        )

    def prop1_taus(self) -> Tuple[int, ...]:
        """
        Pilot lengths checked by the identifiability study. Lengths too short to
        hold K orthogonal pilots are left out.
        """
        if not self.tau_from_bound:
            return (self.dims.tau,)
        bound = min_pilots(self.dims)
        return tuple(
            bound + offset for offset in PROP1_OFFSETS if bound + offset >= self.dims.K
        )

    def trials_of(self, drop: int) -> range:
        """ Trial indices simulated within a user drop """
        return range(drop, self.trials, self.drops)
