"""
HRIS operation model: per pilot instance, the reflection matrix Psi(rho, psi)
applied on the reflected path and the analog combining matrix Phi(rho, phi)
feeding the receive RF chains, plus generation of configuration schedules.
"""
from typing import Iterator, Union, Sequence
import enum

import attr
from attr.validators import instance_of
import numpy as np

from hrisim.channel.scenario import SystemDims


class ScheduleMode(enum.Enum):
    RANDOM = "random"
    CONSTANT = "constant"


class RhoPolicy(enum.Enum):
    UNIFORM = "uniform"
    PER_ELEMENT = "per_element"
    SPLIT = "split"


class Connectivity(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


def connectivity_mask(n_chains: int, n_elements: int, preset: Connectivity) -> np.ndarray:
    """
    Boolean ``N_r x N`` wiring mask.

    The partial preset wires contiguous blocks of elements to a single RF chain,
    the way elements placed over separate waveguides would be.
    """
    preset = Connectivity(preset)
    if preset is Connectivity.FULL:
        return np.ones((n_chains, n_elements), dtype=bool)
    chain_of_element = (np.arange(n_elements) * n_chains) // n_elements
    return chain_of_element[np.newaxis, :] == np.arange(n_chains)[:, np.newaxis]


def rho_profile(
    n_elements: int, rho: Union[float, Sequence[float]], policy: RhoPolicy
) -> np.ndarray:
    """
    Per-element amplitude split.

    :param int n_elements: Number of HRIS elements
    :param rho: Scalar (uniform/split) or vector (per_element)
    :param RhoPolicy policy: How to interpret ``rho``. For ``split``, ``rho`` is the
        fraction of purely reflective elements; the rest only sense.
    """
    policy = RhoPolicy(policy)
    if policy is RhoPolicy.PER_ELEMENT:
        profile = np.asarray(rho, dtype=np.float64).reshape(-1)
        if profile.size != n_elements:
            raise ValueError(
                f"Per-element rho needs {n_elements} values, got {profile.size}."
            )
    else:
        fraction = float(np.asarray(rho, dtype=np.float64))
        if policy is RhoPolicy.UNIFORM:
            profile = np.full(n_elements, fraction)
        else:
            # evenly spread reflective elements, round(N * fraction) of them
            idx = np.arange(n_elements)
            profile = (
                np.floor((idx + 1) * fraction + 0.5) > np.floor(idx * fraction + 0.5)
            ).astype(np.float64)
    if np.any(profile < 0) or np.any(profile > 1):
        raise ValueError("rho must lie in [0, 1].")
    return profile


@attr.s(frozen=True, slots=True)
class HrisSnapshot:
    """
    HRIS configuration during one pilot instance.

    :param np.ndarray rho: ``N`` amplitude splits in [0, 1]
    :param np.ndarray psi: ``N`` reflection phases
    :param np.ndarray phi: ``N_r x N`` combining phases
    :param np.ndarray connect: ``N_r x N`` boolean wiring mask
    """

    rho = attr.ib(validator=instance_of(np.ndarray))
    psi = attr.ib(validator=instance_of(np.ndarray))
    phi = attr.ib(validator=instance_of(np.ndarray))
    connect = attr.ib(validator=instance_of(np.ndarray))

    def __attrs_post_init__(self):
        if np.any(self.rho < 0) or np.any(self.rho > 1):
            raise ValueError("rho must lie in [0, 1].")
        if self.psi.shape != self.rho.shape:
            raise ValueError("psi and rho must have one entry per element.")
        if self.phi.shape != self.connect.shape or self.phi.shape[1] != self.rho.size:
            raise ValueError("phi and connect must both be N_r x N.")


def build_psi(snapshot: HrisSnapshot) -> np.ndarray:
    """ Reflection matrix, diag(rho_l * exp(j psi_l)) """
    return np.diag(snapshot.rho * np.exp(1j * snapshot.psi))


def build_phi(snapshot: HrisSnapshot) -> np.ndarray:
    """ Combining matrix, (1 - rho_l) exp(j phi_{r,l}) where connected and 0 elsewhere """
    phi = (1 - snapshot.rho)[np.newaxis, :] * np.exp(1j * snapshot.phi)
    return np.where(snapshot.connect, phi, 0)


@attr.s(frozen=True, slots=True)
class HrisSchedule:
    """
    Sequence of ``tau`` HRIS configurations sharing rho and the wiring mask.
    Phases are stored stacked over the pilot instances.

    :param np.ndarray rho: ``N`` amplitude splits, constant over the window
    :param np.ndarray psi: ``tau x N`` reflection phases
    :param np.ndarray phi: ``tau x N_r x N`` combining phases
    :param np.ndarray connect: ``N_r x N`` wiring mask
    """

    rho = attr.ib(validator=instance_of(np.ndarray))
    psi = attr.ib(validator=instance_of(np.ndarray), repr=False)
    phi = attr.ib(validator=instance_of(np.ndarray), repr=False)
    connect = attr.ib(validator=instance_of(np.ndarray), repr=False)

    def __attrs_post_init__(self):
        if self.psi.ndim != 2 or self.phi.ndim != 3:
            raise ValueError("psi must be tau x N and phi tau x N_r x N.")
        if self.psi.shape[0] != self.phi.shape[0]:
            raise ValueError("psi and phi must cover the same pilot instances.")
        if self.phi.shape[1:] != self.connect.shape:
            raise ValueError("The wiring mask must match the combining phases.")

    def __len__(self):
        return self.psi.shape[0]

    def __iter__(self) -> Iterator[HrisSnapshot]:
        for inst in range(len(self)):
            yield self.snapshot(inst)

    @property
    def snapshots(self):
        return list(iter(self))

    def snapshot(self, inst: int) -> HrisSnapshot:
        return HrisSnapshot(
            rho=self.rho, psi=self.psi[inst], phi=self.phi[inst], connect=self.connect
        )

    def with_rho(self, rho: np.ndarray) -> "HrisSchedule":
        """ Same phases and wiring, different amplitude split """
        return attr.evolve(self, rho=np.broadcast_to(rho, self.rho.shape).astype(np.float64))

    def psi_diagonals(self) -> np.ndarray:
        """ ``tau x N`` diagonals of Psi(n) """
        return self.rho[np.newaxis, :] * np.exp(1j * self.psi)

    def phi_stack(self) -> np.ndarray:
        """ ``tau x N_r x N`` stack of Phi(n) """
        phi = (1 - self.rho)[np.newaxis, np.newaxis, :] * np.exp(1j * self.phi)
        return np.where(self.connect[np.newaxis, :, :], phi, 0)


def make_schedule(
    dims: SystemDims,
    mode: ScheduleMode,
    rho: Union[float, Sequence[float]],
    rng: np.random.Generator,
    rho_policy: RhoPolicy = RhoPolicy.UNIFORM,
    connectivity: Connectivity = Connectivity.FULL,
) -> HrisSchedule:
    """
    Generate the HRIS configuration over the estimation window.

    In random mode every reflection phase and every connected combining phase is
    drawn uniformly on [0, 2pi) per pilot instance. In constant mode one such
    snapshot is drawn and repeated ``tau`` times. rho is held constant over the
    window.

    :param SystemDims dims: Problem sizes
    :param ScheduleMode mode: random or constant
    :param rho: amplitude split (see :func:`rho_profile`)
    :param np.random.Generator rng: Source of the phases
    :param RhoPolicy rho_policy: How ``rho`` is interpreted
    :param Connectivity connectivity: Wiring preset
    """
    mode = ScheduleMode(mode)
    profile = rho_profile(dims.N, rho, rho_policy)
    connect = connectivity_mask(dims.N_r, dims.N, connectivity)
    draws = dims.tau if mode is ScheduleMode.RANDOM else 1
    psi = rng.uniform(0.0, 2 * np.pi, size=(draws, dims.N))
    phi = rng.uniform(0.0, 2 * np.pi, size=(draws, dims.N_r, dims.N))
    phi = np.where(connect[np.newaxis, :, :], phi, 0.0)
    if mode is ScheduleMode.CONSTANT:
        psi = np.repeat(psi, dims.tau, axis=0)
        phi = np.repeat(phi, dims.tau, axis=0)
    return HrisSchedule(rho=profile, psi=psi, phi=phi, connect=connect)
