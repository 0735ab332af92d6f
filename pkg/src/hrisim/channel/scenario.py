"""
Physical setup of the uplink: problem sizes, node geometry, pathloss gains and
i.i.d. Rayleigh channel draws, all fed from seeded substreams.
"""
from typing import Tuple
import enum

import attr
from attr.validators import instance_of
import numpy as np


def _positive_int(instance, attribute, value):
    if not isinstance(value, int) or value < 1:
        raise ValueError(f"{attribute.name} must be a positive integer, got {value}.")


def _as_point(value) -> np.ndarray:
    point = np.asarray(value, dtype=np.float64)
    if point.shape != (2,):
        raise ValueError(f"Expected a 2D point, got {value}.")
    return point


@attr.s(frozen=True, slots=True)
class SystemDims:
    """
    Problem sizes.

    :param int M: Number of BS antennas
    :param int N: Number of HRIS elements
    :param int N_r: Number of HRIS receive RF chains
    :param int K: Number of single-antenna users
    :param int tau: Pilot length
    """

    M = attr.ib(validator=_positive_int)
    N = attr.ib(validator=_positive_int)
    N_r = attr.ib(validator=_positive_int)
    K = attr.ib(validator=_positive_int)
    tau = attr.ib(validator=_positive_int)

    def __attrs_post_init__(self):
        if self.N_r > self.N:
            raise ValueError(
                f"An HRIS can't have more RF chains ({self.N_r}) than elements ({self.N})."
            )

    def with_tau(self, tau: int) -> "SystemDims":
        return attr.evolve(self, tau=int(tau))


@attr.s(frozen=True, slots=True)
class SystemGeometry:
    """
    Node placement and pathloss constants. Points are in meters.

    :param np.ndarray bs_pos: BS location
    :param np.ndarray hris_pos: HRIS location
    :param np.ndarray ut_center: Center of the user disk
    :param float ut_radius: Radius of the user disk
    :param float d0: Reference distance
    :param float lambda0_db: Pathloss at the reference distance, in dB
    :param float alpha_h: Pathloss exponent of the HRIS-BS link
    :param float alpha_g: Pathloss exponent of the user-HRIS links
    """

    bs_pos = attr.ib(factory=lambda: (0.0, 0.0), converter=_as_point)
    hris_pos = attr.ib(factory=lambda: (0.0, 50.0), converter=_as_point)
    ut_center = attr.ib(factory=lambda: (30.0, 50.0), converter=_as_point)
    ut_radius = attr.ib(default=10.0, converter=float)
    d0 = attr.ib(default=1.0, converter=float)
    lambda0_db = attr.ib(default=-20.0, converter=float)
    alpha_h = attr.ib(default=2.2, converter=float)
    alpha_g = attr.ib(default=2.1, converter=float)

    def __attrs_post_init__(self):
        if self.d0 <= 0:
            raise ValueError("Reference distance d0 must be positive.")
        if self.ut_radius < 0:
            raise ValueError("User disk radius can't be negative.")
        if self.alpha_h <= 0 or self.alpha_g <= 0:
            raise ValueError("Pathloss exponents must be positive.")


@attr.s(frozen=True, slots=True)
class DropDistances:
    """ Distances of a single user drop, in meters """

    d_h = attr.ib(converter=float)
    d_users = attr.ib(validator=instance_of(np.ndarray))
    ut_positions = attr.ib(validator=instance_of(np.ndarray), repr=False)


@attr.s(frozen=True, slots=True)
class ChannelRealization:
    """
    One draw of the individual channels.

    :param np.ndarray H: ``M x N`` HRIS-BS channel
    :param np.ndarray G: ``N x K`` users-HRIS channels, column k is g_k
    :param float beta: Pathloss gain of H
    :param np.ndarray gamma: Pathloss gains of the K user links
    """

    H = attr.ib(validator=instance_of(np.ndarray), repr=False)
    G = attr.ib(validator=instance_of(np.ndarray), repr=False)
    beta = attr.ib(converter=float)
    gamma = attr.ib(converter=lambda x: np.asarray(x, dtype=np.float64))

    def cascaded(self) -> np.ndarray:
        """ ``K x M x N`` stack of H diag(g_k) """
        return self.H[np.newaxis, :, :] * self.G.T[:, np.newaxis, :]


class Stream(enum.IntEnum):
    """ Independent random substreams of a run """

    DROP = 1
    SCHEDULE = 2
    CHANNEL = 3
    NOISE = 4
    BASELINE = 5
    PHASES = 6


@attr.s(frozen=True, slots=True)
class SeededRng:
    """
    Factory of reproducible ``np.random.Generator`` objects.

    A generator is identified by ``(seed, stream, *indices)``; the same key yields the
    same draws regardless of which worker process builds it.

    :param int seed: Root seed of the run
    :param int stream: Substream label, usually a :class:`Stream` member
    """

    seed = attr.ib(converter=int)
    stream = attr.ib(default=0, converter=int)

    def __attrs_post_init__(self):
        if self.seed < 0:
            raise ValueError("Seeds must be non-negative.")

    def generator(self, *indices: int) -> np.random.Generator:
        """ Generator for the given trial/stream indices """
        key = (self.stream,) + tuple(int(idx) for idx in indices)
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=key)
        )

    def substream(self, stream: int) -> "SeededRng":
        return attr.evolve(self, stream=int(stream))


def pathloss(dist: float, d0: float, lambda0_db: float, alpha: float) -> float:
    """
    Distance-based pathloss gain in linear scale,
    ``10^(lambda0_db/10) * (dist/d0)^(-alpha)``.

    :param float dist: Link distance in meters
    :param float d0: Reference distance in meters
    :param float lambda0_db: Pathloss at ``d0`` in dB
    :param float alpha: Pathloss exponent
    """
    dist = np.asarray(dist, dtype=np.float64)
    if np.any(dist <= 0):
        raise ValueError(f"Link distances must be positive, got {dist}.")
    gain = 10 ** (lambda0_db / 10) * (dist / d0) ** (-alpha)
    return float(gain) if gain.ndim == 0 else gain


def sample_geometry(
    dims: SystemDims, geometry: SystemGeometry, rng: np.random.Generator
) -> DropDistances:
    """
    Drop ``K`` users uniformly over the disk around ``geometry.ut_center`` and
    compute the HRIS-BS and HRIS-user distances.
    """
    radius = geometry.ut_radius * np.sqrt(rng.uniform(size=dims.K))
    angle = rng.uniform(0.0, 2 * np.pi, size=dims.K)
    offsets = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
    ut_positions = geometry.ut_center[np.newaxis, :] + offsets
    d_h = np.linalg.norm(geometry.bs_pos - geometry.hris_pos)
    d_users = np.linalg.norm(ut_positions - geometry.hris_pos[np.newaxis, :], axis=1)
    return DropDistances(d_h=d_h, d_users=d_users, ut_positions=ut_positions)


def drop_gains(
    geometry: SystemGeometry, distances: DropDistances
) -> Tuple[float, np.ndarray]:
    """ Pathloss gains (beta, gamma) of a user drop """
    beta = pathloss(distances.d_h, geometry.d0, geometry.lambda0_db, geometry.alpha_h)
    gamma = pathloss(
        distances.d_users, geometry.d0, geometry.lambda0_db, geometry.alpha_g
    )
    return beta, np.atleast_1d(gamma)


def circular_gaussian(
    rng: np.random.Generator, shape: Tuple[int, ...], variance=1.0
) -> np.ndarray:
    """ Zero-mean circular complex normal samples, real and imaginary parts each of variance/2 """
    scale = np.sqrt(np.asarray(variance, dtype=np.float64) / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(
    dims: SystemDims, beta: float, gamma: np.ndarray, rng: np.random.Generator
) -> ChannelRealization:
    """
    Draw i.i.d. Rayleigh channels: entries of H with variance ``beta``, entries of
    column g_k with variance ``gamma[k]``.
    """
    gamma = np.asarray(gamma, dtype=np.float64).reshape(-1)
    if gamma.size != dims.K:
        raise ValueError(f"Expected {dims.K} user gains, got {gamma.size}.")
    if beta < 0 or np.any(gamma < 0):
        raise ValueError("Channel gains must be non-negative.")
    H = circular_gaussian(rng, (dims.M, dims.N), beta)
    G = circular_gaussian(rng, (dims.N, dims.K), gamma[np.newaxis, :])
    return ChannelRealization(H=H, G=G, beta=beta, gamma=gamma)
