"""
Cascaded channel estimation through a purely reflective RIS, used as the
reference the HRIS pipeline is compared against.

The estimator exploits that every cascaded channel shares H:
C_k = H diag(g_k) = C_1 diag(lambda_k) with lambda_k = g_k / g_1 elementwise.

* Phase 1: user 1 sounds alone over tau_1 = tau - (K - 1) ceil(N / M) instances
  with DFT reflection vectors and C_1 is solved by least squares.
* Phase 2: every other user sounds over ceil(N / M) instances with random
  unit-modulus reflections and its scaling vector lambda_k is solved against the
  estimate of C_1.
"""
from typing import Optional
import logging

import attr
from attr.validators import instance_of
import numpy as np
import scipy.linalg

from hrisim.channel.scenario import ChannelRealization, circular_gaussian
from hrisim.estimation.sounding import NoiseModel, PilotBook, gen_pilots
from hrisim.linalg.numkernel import lstsq_minnorm, numerical_rank

#: Condition number above which a noisy Phase-2 system gets diagonal loading
PHASE2_COND_LIMIT = 1e4
#: Condition number treated as rank deficient, noisy or not
PHASE2_RANK_LIMIT = 1e10
#: Loading relative to the mean eigenvalue of the Gram matrix, which caps the
#: Gram condition number near PHASE2_COND_LIMIT ** 2
PHASE2_LOADING = 1e-8


@attr.s(frozen=True, slots=True)
class BaselineEstimate:
    """
    :param np.ndarray C_hat: ``K x M x N`` cascaded channel estimates
    :param np.ndarray regularized: Per user, whether Phase 2 needed diagonal loading
    :param int rank_phase1: Numerical rank of the Phase-1 reflection matrix
    """

    C_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    regularized = attr.ib(validator=instance_of(np.ndarray))
    rank_phase1 = attr.ib(validator=instance_of(int))


def phase2_length(n_antennas: int, n_elements: int) -> int:
    """ Instances per user in Phase 2, ceil(N / M) """
    return -(-n_elements // n_antennas)


def baseline_min_pilots(n_antennas: int, n_elements: int, n_users: int) -> int:
    """ Structural pilot minimum N + (K - 1) ceil(N / M) """
    return n_elements + (n_users - 1) * phase2_length(n_antennas, n_elements)


def phase1_operator(tau1: int, n_elements: int) -> np.ndarray:
    """
    ``tau1 x N`` matrix whose row n is the reflection vector v(n), the DFT column
    of index n mod N.
    """
    if tau1 < 1:
        raise ValueError("Phase 1 needs at least one instance.")
    inst = np.arange(tau1)[:, np.newaxis] % n_elements
    elem = np.arange(n_elements)[np.newaxis, :]
    return np.exp(-2j * np.pi * inst * elem / n_elements)


def _observe(cascaded, reflections, symbols, amplitude, sigma2, rng):
    """ ``M x L`` observations, column n = sqrt(P_t) C v(n) s(n) + z(n) """
    clean = amplitude * (cascaded @ reflections.T) * symbols[np.newaxis, :]
    if sigma2 > 0:
        clean = clean + circular_gaussian(rng, clean.shape, sigma2)
    return clean


def _solve_scaling(system: np.ndarray, rhs: np.ndarray, user: int, noisy: bool):
    """
    Least-squares scaling vector of one user. A noisy system is loaded once its
    condition number passes PHASE2_COND_LIMIT, a noiseless one only when it is
    numerically rank deficient.
    """
    gram = system.conj().T @ system
    svals = scipy.linalg.svdvals(system)
    limit = PHASE2_COND_LIMIT if noisy else PHASE2_RANK_LIMIT
    if svals[-1] == 0 or svals[0] / svals[-1] > limit:
        loading = PHASE2_LOADING * np.real(np.trace(gram)) / gram.shape[0]
        logging.warning(
            f"Phase-2 system of user {user} is ill-conditioned, applying diagonal loading {loading:.3g}."
        )
        solution = scipy.linalg.solve(
            gram + loading * np.eye(gram.shape[0]), system.conj().T @ rhs, assume_a="her"
        )
        return solution, True
    solution, _ = lstsq_minnorm(system, rhs)
    return solution, False


def baseline_reflective_cascaded(
    channels: ChannelRealization,
    tau: int,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
    pilots: Optional[PilotBook] = None,
) -> BaselineEstimate:
    """
    Estimate every cascaded channel with the two-phase structured least squares.

    Pilots beyond the structural minimum go to Phase 1. The BS noise variance
    ``noise.sigma2_b`` is used; the reflection amplitude is 1 everywhere.

    :param ChannelRealization channels: True H and G
    :param int tau: Total pilot budget
    :param NoiseModel noise: Power and noise
    :param np.random.Generator rng: Source of the Phase-2 reflections and of the noise
    :param PilotBook pilots: ``K x tau`` symbols, user k sends ``S[k, n]`` in its
        slots. Defaults to DFT pilots.
    """
    M, N = channels.H.shape
    K = channels.G.shape[1]
    minimum = baseline_min_pilots(M, N, K)
    if tau < minimum:
        raise ValueError(
            f"The reflective baseline needs at least {minimum} pilots, got {tau}."
        )
    if pilots is None:
        pilots = gen_pilots(K, tau)
    if pilots.S.shape != (K, tau):
        raise ValueError(f"Pilots must be {K}x{tau}, got {pilots.S.shape}.")
    if rng is None:
        if K > 1 or noise.sigma2_b > 0:
            raise ValueError("A random generator is needed for the baseline.")
    amplitude = np.sqrt(noise.pilot_power)
    cascaded = channels.cascaded()
    length = phase2_length(M, N)
    tau1 = tau - (K - 1) * length

    reflections = phase1_operator(tau1, N)
    symbols = pilots.S[0, :tau1]
    y1 = _observe(cascaded[0], reflections, symbols, amplitude, noise.sigma2_b, rng)
    y1 = y1 / (amplitude * symbols[np.newaxis, :])
    c1_t, rank_phase1 = lstsq_minnorm(reflections, y1.T)
    c1_hat = c1_t.T

    C_hat = np.empty((K, M, N), dtype=np.complex128)
    C_hat[0] = c1_hat
    regularized = np.zeros(K, dtype=bool)
    for user in range(1, K):
        start = tau1 + (user - 1) * length
        symbols = pilots.S[user, start : start + length]
        phases = rng.uniform(0.0, 2 * np.pi, size=(length, N))
        v = np.exp(1j * phases)
        y = _observe(cascaded[user], v, symbols, amplitude, noise.sigma2_b, rng)
        y = y / (amplitude * symbols[np.newaxis, :])
        # rows of block n are C_1 diag(v(n))
        system = (c1_hat[np.newaxis, :, :] * v[:, np.newaxis, :]).reshape(length * M, N)
        scaling, regularized[user] = _solve_scaling(
            system, y.T.reshape(-1), user, noise.sigma2_b > 0
        )
        C_hat[user] = c1_hat * scaling[np.newaxis, :]
    return BaselineEstimate(
        C_hat=C_hat, regularized=regularized, rank_phase1=int(rank_phase1)
    )


def phase1_identifiable(tau: int, n_antennas: int, n_elements: int, n_users: int) -> bool:
    """ Whether Phase 1 leaves a full-rank reflection matrix for the given budget """
    tau1 = tau - (n_users - 1) * phase2_length(n_antennas, n_elements)
    if tau1 < 1:
        return False
    return numerical_rank(phase1_operator(tau1, n_elements)) == n_elements
