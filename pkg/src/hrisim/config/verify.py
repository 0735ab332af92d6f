from typing import Any, MutableMapping

from hrisim.config.config_parser import ConfigError

STUDIES = ("prop1", "validate", "tradeoff", "snr-sweep")
SCHEDULE_MODES = ("random", "constant")
CONNECTIVITY = ("full", "partial")
RHO_POLICIES = ("uniform", "split")
PILOT_FAMILIES = ("dft", "hadamard")
G_SOURCES = ("true", "estimated")
FORMATS = ("csv", "json")


def _one_of(value, options, path):
    if value not in options:
        raise ConfigError(f"'{path}' must be one of {', '.join(options)}, got '{value}'.")


def _positive(value, path):
    if value <= 0:
        raise ConfigError(f"'{path}' must be positive, got {value}.")


def _fraction(value, path):
    if not 0 <= value <= 1:
        raise ConfigError(f"'{path}' must lie in [0, 1], got {value}.")


def verify_input(config: MutableMapping[str, Any]):
    """ Validate the constraints a type check can't express """
    _one_of(config["study"], STUDIES, "study")

    system = config["system"]
    for key in ("M", "N", "N_r", "K"):
        _positive(system[key], f"system.{key}")
    if system["N_r"] > system["N"]:
        raise ConfigError(
            f"'system.N_r' ({system['N_r']}) can't exceed 'system.N' ({system['N']})."
        )
    if system["tau"] < 0:
        raise ConfigError("'system.tau' can't be negative, use 0 for the study default.")
    if 0 < system["tau"] < system["K"]:
        raise ConfigError(
            f"'system.tau' ({system['tau']}) must be at least 'system.K' ({system['K']})."
        )

    geometry = config["geometry"]
    for key in ("bs_pos", "hris_pos", "ut_center"):
        if len(geometry[key]) != 2:
            raise ConfigError(f"'geometry.{key}' must be a 2D point.")
    for key in ("d0", "alpha_h", "alpha_g"):
        _positive(geometry[key], f"geometry.{key}")
    if geometry["ut_radius"] < 0:
        raise ConfigError("'geometry.ut_radius' can't be negative.")

    hris = config["hris"]
    _one_of(hris["schedule_mode"], SCHEDULE_MODES, "hris.schedule_mode")
    _one_of(hris["connectivity"], CONNECTIVITY, "hris.connectivity")
    _one_of(hris["rho_policy"], RHO_POLICIES, "hris.rho_policy")
    _fraction(hris["rho"], "hris.rho")

    noise = config["noise"]
    if not noise["snr_db"]:
        raise ConfigError("'noise.snr_db' can't be empty.")
    _positive(noise["pilot_power"], "noise.pilot_power")
    for key in ("sensing_noise_scale", "bs_noise_scale"):
        if noise[key] < 0:
            raise ConfigError(f"'noise.{key}' can't be negative.")
    _one_of(noise["pilot_family"], PILOT_FAMILIES, "noise.pilot_family")

    experiment = config["experiment"]
    if experiment["trials"] < 0:
        raise ConfigError("'experiment.trials' can't be negative, use 0 for the study default.")
    _positive(experiment["drops"], "experiment.drops")
    _positive(experiment["phase_seeds"], "experiment.phase_seeds")
    if experiment["seed"] < 0:
        raise ConfigError("'experiment.seed' can't be negative.")
    if not experiment["rho_grid"]:
        raise ConfigError("'experiment.rho_grid' can't be empty.")
    for idx, rho in enumerate(experiment["rho_grid"]):
        _fraction(rho, f"experiment.rho_grid[{idx}]")
    _one_of(experiment["lmmse_h_source"], G_SOURCES, "experiment.lmmse_h_source")
    for idx, level in enumerate(experiment["gain_levels"]):
        _positive(level, f"experiment.gain_levels[{idx}]")

    output = config["output"]
    _one_of(output["format"], FORMATS, "output.format")
    parallelism = output["parallelism"]
    if parallelism not in ("auto", "strict") and not (
        parallelism.isdigit() and int(parallelism) > 0
    ):
        raise ConfigError(
            f"'output.parallelism' must be auto, strict or a positive integer, got '{parallelism}'."
        )
