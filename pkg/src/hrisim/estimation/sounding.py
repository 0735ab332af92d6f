"""
Pilot design and forward simulation of the uplink estimation phase.

Each user k sends ``sqrt(P_t) * s_k(n)``, n = 1..tau. The HRIS RF chains observe
``Phi(n) G s(n)`` plus noise and the BS observes ``H Psi(n) G s(n)`` plus noise.
The stacked observations are linear in vec(G) and vec(H) through the operators
A_RC and (A_BS kron I_M).
"""
from typing import Optional
import enum

import attr
from attr.validators import instance_of
import numpy as np
import scipy.linalg

from hrisim.channel.hris_model import HrisSchedule
from hrisim.channel.scenario import ChannelRealization, circular_gaussian


class PilotFamily(enum.Enum):
    DFT = "dft"
    HADAMARD = "hadamard"


@attr.s(frozen=True, slots=True)
class PilotBook:
    """
    ``K x tau`` unit-modulus pilot matrix with mutually orthogonal rows.

    :param np.ndarray S: Entry ``[k, n]`` is s_k(n)
    """

    S = attr.ib(validator=instance_of(np.ndarray))

    @property
    def num_users(self) -> int:
        return self.S.shape[0]

    @property
    def tau(self) -> int:
        return self.S.shape[1]


def gen_pilots(K: int, tau: int, family: PilotFamily = PilotFamily.DFT) -> PilotBook:
    """
    Orthogonal pilots, ``S S^H = tau I_K``.

    The DFT family uses s_k(n) = exp(-j 2pi k n / tau) with zero-based k, n. The
    Hadamard family takes the first K rows of the Sylvester-Hadamard matrix and
    needs tau to be a power of two.
    """
    if K < 1:
        raise ValueError("At least one user is needed.")
    if tau < K:
        raise ValueError(
            f"Can't build {K} orthogonal pilots of length {tau}; tau must be >= K."
        )
    family = PilotFamily(family)
    if family is PilotFamily.DFT:
        k = np.arange(K)[:, np.newaxis]
        n = np.arange(tau)[np.newaxis, :]
        S = np.exp(-2j * np.pi * k * n / tau)
    else:
        if tau & (tau - 1):
            raise ValueError(f"Hadamard pilots need a power-of-two length, got {tau}.")
        S = scipy.linalg.hadamard(tau)[:K].astype(np.complex128)
    return PilotBook(S=S)


@attr.s(frozen=True, slots=True)
class NoiseModel:
    """
    Transmit power and receiver noise.

    :param float pilot_power: P_t, per-user pilot power (linear)
    :param float sigma2: Common noise variance sigma^2
    :param float sigma2_r: Noise variance at the HRIS RF chains, defaults to ``sigma2``
    :param float sigma2_b: Noise variance at the BS, defaults to ``sigma2``
    """

    pilot_power = attr.ib(default=1.0, converter=float)
    sigma2 = attr.ib(default=1.0, converter=float)
    sigma2_r = attr.ib(default=None, converter=attr.converters.optional(float))
    sigma2_b = attr.ib(default=None, converter=attr.converters.optional(float))

    def __attrs_post_init__(self):
        if self.pilot_power <= 0:
            raise ValueError("Pilot power must be positive.")
        if self.sigma2 < 0:
            raise ValueError("Noise variance can't be negative.")
        if self.sigma2_r is None:
            object.__setattr__(self, "sigma2_r", self.sigma2)
        if self.sigma2_b is None:
            object.__setattr__(self, "sigma2_b", self.sigma2)
        if self.sigma2_r < 0 or self.sigma2_b < 0:
            raise ValueError("Noise variance can't be negative.")

    @classmethod
    def from_snr_db(
        cls,
        snr_db: float,
        pilot_power: float = 1.0,
        sensing_scale: float = 1.0,
        bs_scale: float = 1.0,
    ) -> "NoiseModel":
        """ Noise model for a transmit SNR Gamma = P_t / sigma^2 given in dB """
        sigma2 = pilot_power / 10 ** (snr_db / 10)
        return cls(
            pilot_power=pilot_power,
            sigma2=sigma2,
            sigma2_r=sigma2 * sensing_scale,
            sigma2_b=sigma2 * bs_scale,
        )

    @staticmethod
    def _ratio(power, variance):
        return np.inf if variance == 0 else power / variance

    @property
    def snr(self) -> float:
        """ Gamma = P_t / sigma^2 """
        return self._ratio(self.pilot_power, self.sigma2)

    @property
    def snr_sensing(self) -> float:
        return self._ratio(self.pilot_power, self.sigma2_r)

    @property
    def snr_bs(self) -> float:
        return self._ratio(self.pilot_power, self.sigma2_b)


@attr.s(frozen=True, slots=True)
class SoundingRecord:
    """
    Everything produced by one estimation phase.

    :param np.ndarray y_rc: ``tau * N_r`` stacked HRIS observations
    :param np.ndarray y_bs: ``tau * M`` stacked BS observations
    :param np.ndarray a_rc: ``tau N_r x K N`` HRIS measurement operator
    :param np.ndarray a_bs: ``tau x N`` BS measurement operator, built from the true G
    :param np.ndarray r: ``tau x N`` impinging vectors r(n) = G s(n)
    :param np.ndarray psi_diag: ``tau x N`` diagonals of Psi(n), known to the BS
    :param np.ndarray S: ``K x tau`` pilot matrix
    :param float pilot_power: P_t used during sounding
    """

    y_rc = attr.ib(validator=instance_of(np.ndarray), repr=False)
    y_bs = attr.ib(validator=instance_of(np.ndarray), repr=False)
    a_rc = attr.ib(validator=instance_of(np.ndarray), repr=False)
    a_bs = attr.ib(validator=instance_of(np.ndarray), repr=False)
    r = attr.ib(validator=instance_of(np.ndarray), repr=False)
    psi_diag = attr.ib(validator=instance_of(np.ndarray), repr=False)
    S = attr.ib(validator=instance_of(np.ndarray), repr=False)
    pilot_power = attr.ib(default=1.0, converter=float)

    @property
    def tau(self) -> int:
        return self.a_bs.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.y_bs.size // self.tau

    def a_bs_for(self, G: np.ndarray) -> np.ndarray:
        """ BS operator assembled from another (usually estimated) G """
        G = np.asarray(G)
        if G.shape != (self.psi_diag.shape[1], self.S.shape[0]):
            raise ValueError(f"G has shape {G.shape}, incompatible with the record.")
        return self.psi_diag * (G @ self.S).T


def _check_lengths(schedule: HrisSchedule, pilots: PilotBook):
    if len(schedule) != pilots.tau:
        raise ValueError(
            f"Schedule covers {len(schedule)} instances but pilots have length {pilots.tau}."
        )


def assemble_a_rc(schedule: HrisSchedule, pilots: PilotBook) -> np.ndarray:
    """
    HRIS measurement operator,
    ``[A_RC]_{n N_r + r, k N + i} = [Phi(n)]_{r,i} s_k(n)`` (zero-based).
    """
    _check_lengths(schedule, pilots)
    phi = schedule.phi_stack()
    tau, n_chains, n_elements = phi.shape
    blocks = phi[:, :, np.newaxis, :] * pilots.S.T[:, np.newaxis, :, np.newaxis]
    return blocks.reshape(tau * n_chains, pilots.num_users * n_elements)


def assemble_a_bs(schedule: HrisSchedule, pilots: PilotBook, G: np.ndarray) -> np.ndarray:
    """
    BS measurement operator, ``[A_BS]_{n,i} = [Psi(n)]_{ii} sum_k [g_k]_i s_k(n)``.

    :param np.ndarray G: ``N x K`` channel, true or estimated
    """
    _check_lengths(schedule, pilots)
    G = np.asarray(G)
    if G.shape != (schedule.rho.size, pilots.num_users):
        raise ValueError(
            f"G must be {schedule.rho.size}x{pilots.num_users}, got {G.shape}."
        )
    return schedule.psi_diagonals() * (G @ pilots.S).T


def simulate(
    schedule: HrisSchedule,
    pilots: PilotBook,
    channels: ChannelRealization,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
) -> SoundingRecord:
    """
    Synthesize the noisy observations of one estimation phase, instance by instance.

    :param HrisSchedule schedule: HRIS configuration per pilot instance
    :param PilotBook pilots: Pilot symbols
    :param ChannelRealization channels: True H and G
    :param NoiseModel noise: Power and noise variances
    :param np.random.Generator rng: Noise source, only needed when the noise is nonzero
    """
    _check_lengths(schedule, pilots)
    amplitude = np.sqrt(noise.pilot_power)
    r = (channels.G @ pilots.S).T
    sensed = np.einsum("nri,ni->nr", schedule.phi_stack(), r)
    reflected = (schedule.psi_diagonals() * r) @ channels.H.T
    if noise.sigma2_r > 0 or noise.sigma2_b > 0:
        if rng is None:
            raise ValueError("A random generator is needed for noisy sounding.")
        z_r = circular_gaussian(rng, sensed.shape, noise.sigma2_r)
        z_b = circular_gaussian(rng, reflected.shape, noise.sigma2_b)
    else:
        z_r = z_b = 0
    return SoundingRecord(
        y_rc=(amplitude * sensed + z_r).reshape(-1),
        y_bs=(amplitude * reflected + z_b).reshape(-1),
        a_rc=assemble_a_rc(schedule, pilots),
        a_bs=assemble_a_bs(schedule, pilots, channels.G),
        r=r,
        psi_diag=schedule.psi_diagonals(),
        S=pilots.S,
        pilot_power=noise.pilot_power,
    )
