"""
Estimators of the individual channels and their closed-form errors.

* Noiseless recovery through minimum-norm least squares, with the pilot bound
  needed for identifiability.
* LMMSE estimation of G at the HRIS and of H at the BS, and the trace
  expressions of their mean squared errors.
* Cascaded channel reconstruction and NMSE helpers.

All observations are normalized by ``sqrt(P_t)`` before estimation, so the
effective noise variance is ``1 / Gamma`` and the errors depend on power and
noise only through Gamma.
"""
from collections import namedtuple
from typing import Optional, Sequence, Tuple
import enum
import logging

import attr
from attr.validators import instance_of
import numpy as np
import scipy.linalg

from hrisim.channel.scenario import SystemDims, ChannelRealization
from hrisim.estimation.sounding import SoundingRecord
from hrisim.linalg.numkernel import unvec, kron, blkdiag, lstsq_minnorm


class NumericalError(ArithmeticError):
    """ Raised when an estimator meets a numerically unusable system """


class GSource(enum.Enum):
    """ Which G the BS uses to assemble A_BS """

    TRUE = "true"
    ESTIMATED = "estimated"


class FilterForm(enum.Enum):
    """ Algebraically equivalent ways of writing the LMMSE filter of G """

    AUTO = "auto"
    OBSERVATION = "observation"  # R_g A^H (A R_g A^H + I / Gamma)^-1
    PARAMETER = "parameter"  # (R_g^-1 + Gamma A^H A)^-1 Gamma A^H


MseValue = namedtuple("MseValue", "total, normalized")


@attr.s(frozen=True, slots=True)
class PriorCovariances:
    """
    Second-order priors of the individual channels and the SNR seen by the
    estimator.

    :param np.ndarray user_gains: gamma_k, k = 1..K
    :param float bs_gain: beta
    :param float snr: Gamma = P_t / sigma^2 (linear)
    :param int n_elements: N
    :param int n_antennas: M
    """

    user_gains = attr.ib(converter=lambda x: np.atleast_1d(np.asarray(x, dtype=np.float64)))
    bs_gain = attr.ib(converter=float)
    snr = attr.ib(converter=float)
    n_elements = attr.ib(validator=instance_of(int))
    n_antennas = attr.ib(default=1, validator=instance_of(int))

    def __attrs_post_init__(self):
        if np.any(self.user_gains <= 0) or self.bs_gain <= 0:
            raise ValueError("Prior channel gains must be positive.")
        if self.snr < 0:
            raise ValueError("The SNR can't be negative.")

    @classmethod
    def from_channels(
        cls, channels: ChannelRealization, snr: float
    ) -> "PriorCovariances":
        M, N = channels.H.shape
        return cls(
            user_gains=channels.gamma,
            bs_gain=channels.beta,
            snr=snr,
            n_elements=N,
            n_antennas=M,
        )

    def with_snr(self, snr: float) -> "PriorCovariances":
        return attr.evolve(self, snr=snr)

    @property
    def r_g_diag(self) -> np.ndarray:
        """ Diagonal of R_g, length K N """
        return np.repeat(self.user_gains, self.n_elements)

    @property
    def r_g(self) -> np.ndarray:
        """ blkdiag(gamma_1 I_N, ..., gamma_K I_N) """
        eye = np.eye(self.n_elements)
        return blkdiag([gain * eye for gain in self.user_gains])

    @property
    def r_h(self) -> np.ndarray:
        """ beta I_{MN} """
        return self.bs_gain * np.eye(self.n_antennas * self.n_elements)


@attr.s(frozen=True, slots=True)
class NoiselessRecovery:
    """ Result of the pseudoinverse recovery """

    G_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    H_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    rank_rc = attr.ib(validator=instance_of(int))
    rank_bs = attr.ib(validator=instance_of(int))
    identifiable = attr.ib(validator=instance_of(bool))


@attr.s(frozen=True, slots=True)
class EstimationReport:
    """
    Estimates of one estimation phase and their errors.

    :param np.ndarray G_hat: ``N x K``
    :param np.ndarray H_hat: ``M x N``
    :param np.ndarray C_hat: ``K x M x N`` cascaded channels
    """

    G_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    H_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    C_hat = attr.ib(validator=instance_of(np.ndarray), repr=False)
    nmse_G = attr.ib(converter=float)
    nmse_H = attr.ib(converter=float)
    nmse_C = attr.ib(converter=float)
    closed_mse_G = attr.ib(converter=float)
    closed_mse_H = attr.ib(converter=float)

    def __attrs_post_init__(self):
        for name in ("nmse_G", "nmse_H", "nmse_C"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise NumericalError(f"{name} must be finite and nonnegative, got {value}.")


def min_pilots(dims: SystemDims) -> int:
    """ Smallest tau making both HRIS and BS systems identifiable, max(N, ceil(N K / N_r)) """
    return max(dims.N, -(-dims.N * dims.K // dims.N_r))


def _normalized(record: SoundingRecord) -> Tuple[np.ndarray, np.ndarray]:
    amplitude = np.sqrt(record.pilot_power)
    return record.y_rc / amplitude, record.y_bs / amplitude


def _bs_observations(record: SoundingRecord, y_bs: np.ndarray) -> np.ndarray:
    """ ``M x tau`` matrix Y with vec(Y) = y_bs """
    return unvec(y_bs, record.num_antennas, record.tau)


def recover_noiseless(record: SoundingRecord, dims: SystemDims) -> NoiselessRecovery:
    """
    Pseudoinverse recovery of G at the HRIS and H at the BS.

    H is solved through the Kronecker structure: with Y the ``M x tau`` BS
    observations, Y = H A_BS^T, so H^T is the least-squares solution of
    A_BS X = Y^T and no ``MN x MN`` system is formed. A_BS is assembled from the
    recovered G, as a BS would.
    """
    y_rc, y_bs = _normalized(record)
    g_vec, rank_rc = lstsq_minnorm(record.a_rc, y_rc)
    G_hat = unvec(g_vec, dims.N, dims.K)
    a_bs = record.a_bs_for(G_hat)
    h_t, rank_bs = lstsq_minnorm(a_bs, _bs_observations(record, y_bs).T)
    identifiable = rank_rc == dims.K * dims.N and rank_bs == dims.N
    if not identifiable:
        logging.warning(
            f"Channels are not identifiable: rank(A_RC) = {rank_rc} of {dims.K * dims.N}, "
            f"rank(A_BS) = {rank_bs} of {dims.N}."
        )
    return NoiselessRecovery(
        G_hat=G_hat,
        H_hat=h_t.T,
        rank_rc=rank_rc,
        rank_bs=rank_bs,
        identifiable=bool(identifiable),
    )


def _check_finite_snr(priors: PriorCovariances):
    if not np.isfinite(priors.snr):
        raise ValueError("LMMSE needs a finite SNR; use recover_noiseless instead.")


def lmmse_g_filter(
    a_rc: np.ndarray, priors: PriorCovariances, form: FilterForm = FilterForm.AUTO
) -> np.ndarray:
    """
    LMMSE filter T with vec(G_hat) = T y, y being the normalized HRIS observations.

    :param np.ndarray a_rc: HRIS measurement operator
    :param PriorCovariances priors: Priors and SNR at the HRIS
    :param FilterForm form: Which of the two equivalent expressions to evaluate.
        ``auto`` inverts the smaller of the two matrices.
    """
    _check_finite_snr(priors)
    form = FilterForm(form)
    n_obs, n_unknowns = a_rc.shape
    if form is FilterForm.AUTO:
        form = FilterForm.PARAMETER if n_unknowns <= n_obs else FilterForm.OBSERVATION
    r_g = priors.r_g_diag
    a_h = a_rc.conj().T
    if form is FilterForm.OBSERVATION:
        if priors.snr == 0:
            return np.zeros((n_unknowns, n_obs), dtype=np.complex128)
        inner = (a_rc * r_g[np.newaxis, :]) @ a_h + np.eye(n_obs) / priors.snr
        return r_g[:, np.newaxis] * scipy.linalg.solve(inner, a_rc, assume_a="pos").conj().T
    information = np.diag(1 / r_g) + priors.snr * (a_h @ a_rc)
    return scipy.linalg.solve(information, priors.snr * a_h, assume_a="pos")


@attr.s(slots=True)
class LmmseFilter:
    """
    Cached LMMSE filter of G for a fixed schedule, prior and SNR.

    :param np.ndarray a_rc: HRIS measurement operator
    :param PriorCovariances priors: Priors and SNR at the HRIS
    :param FilterForm form: Filter expression to evaluate
    """

    a_rc = attr.ib(validator=instance_of(np.ndarray), repr=False)
    priors = attr.ib(validator=instance_of(PriorCovariances))
    form = attr.ib(default=FilterForm.AUTO, converter=FilterForm)
    matrix = attr.ib(init=False, repr=False)

    def __attrs_post_init__(self):
        self.matrix = lmmse_g_filter(self.a_rc, self.priors, self.form)

    def apply(self, record: SoundingRecord) -> np.ndarray:
        """ G_hat, ``N x K`` """
        y_rc, _ = _normalized(record)
        return unvec(
            self.matrix @ y_rc, self.priors.n_elements, self.priors.user_gains.size
        )


def lmmse_g(
    record: SoundingRecord,
    priors: PriorCovariances,
    form: FilterForm = FilterForm.AUTO,
) -> np.ndarray:
    """
    LMMSE estimate of G from the HRIS observations,
    vec(G_hat) = R_g A^H (A R_g A^H + I / Gamma)^-1 y / sqrt(P_t).
    """
    return LmmseFilter(a_rc=record.a_rc, priors=priors, form=form).apply(record)


def _trace_inverse(hermitian: np.ndarray) -> float:
    eigs = scipy.linalg.eigvalsh(hermitian)
    if np.any(eigs <= 0):
        raise NumericalError("Information matrix is not positive definite.")
    return float(np.sum(1 / eigs))


def closed_mse_g(
    a_rc: np.ndarray, priors: PriorCovariances, method: str = "information"
) -> MseValue:
    """
    MSE of the LMMSE estimate of G, Tr{(R_g^-1 + Gamma A^H A)^-1}, and its value
    normalized by Tr(R_g).

    :param str method: ``information`` evaluates the expression above, ``woodbury``
        evaluates Tr(R_g) - Tr(R_g A^H (A R_g A^H + I / Gamma)^-1 A R_g).
    """
    _check_finite_snr(priors)
    r_g = priors.r_g_diag
    prior_energy = float(np.sum(r_g))
    if method == "information":
        total = _trace_inverse(
            np.diag(1 / r_g) + priors.snr * (a_rc.conj().T @ a_rc)
        )
    elif method == "woodbury":
        if priors.snr == 0:
            total = prior_energy
        else:
            weighted = a_rc * r_g[np.newaxis, :]
            inner = weighted @ a_rc.conj().T + np.eye(a_rc.shape[0]) / priors.snr
            reduction = np.real(
                np.trace(weighted.conj().T @ scipy.linalg.solve(inner, weighted, assume_a="pos"))
            )
            total = prior_energy - float(reduction)
    else:
        raise ValueError(f"Unknown evaluation method {method}.")
    return MseValue(total, total / prior_energy)


def filter_mse(
    filter_matrix: np.ndarray, a_rc: np.ndarray, priors: PriorCovariances
) -> float:
    """
    Exact MSE of any linear estimate vec(G_hat) = T y under the sounding model,
    Tr(R_g) - 2 Re Tr(T A R_g) + Tr(T (A R_g A^H + I / Gamma) T^H).
    """
    _check_finite_snr(priors)
    if priors.snr == 0:
        raise ValueError("The observation noise is unbounded at zero SNR.")
    r_g = priors.r_g_diag
    weighted = a_rc * r_g[np.newaxis, :]
    cov_y = weighted @ a_rc.conj().T + np.eye(a_rc.shape[0]) / priors.snr
    cross = np.trace(filter_matrix @ weighted)
    quad = np.trace(filter_matrix @ cov_y @ filter_matrix.conj().T)
    return float(np.sum(r_g) - 2 * np.real(cross) + np.real(quad))


def bs_operator(
    record: SoundingRecord, g_source: GSource, G_hat: Optional[np.ndarray] = None
) -> np.ndarray:
    """ A_BS assembled from the requested G """
    g_source = GSource(g_source)
    if g_source is GSource.TRUE:
        return record.a_bs
    if G_hat is None:
        raise ValueError("An estimate of G is needed to assemble A_BS.")
    return record.a_bs_for(G_hat)


def _bs_information(a_bs: np.ndarray, priors: PriorCovariances) -> np.ndarray:
    """ beta^-1 I_N + Gamma A_BS^H A_BS """
    return np.eye(a_bs.shape[1]) / priors.bs_gain + priors.snr * (a_bs.conj().T @ a_bs)


def lmmse_h(
    record: SoundingRecord,
    priors: PriorCovariances,
    g_source: GSource = GSource.ESTIMATED,
    G_hat: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    LMMSE estimate of H from the BS observations with prior beta I.

    With Q = beta^-1 I_N + Gamma A_BS^H A_BS the Kronecker-structured filter
    reduces to H_hat^T = Q^-1 Gamma A_BS^H Y^T, an ``N x N`` solve shared by all M
    antennas.

    :param SoundingRecord record: Observations
    :param PriorCovariances priors: Priors and SNR at the BS
    :param GSource g_source: Assemble A_BS from the true G kept in the record, or
        from ``G_hat`` as a BS relying on the HRIS estimate would
    :param np.ndarray G_hat: ``N x K`` estimate, required for the estimated source
    """
    _check_finite_snr(priors)
    a_bs = bs_operator(record, g_source, G_hat)
    _, y_bs = _normalized(record)
    observations = _bs_observations(record, y_bs)
    rhs = priors.snr * (a_bs.conj().T @ observations.T)
    h_t = scipy.linalg.solve(_bs_information(a_bs, priors), rhs, assume_a="pos")
    return h_t.T


def closed_mse_h(
    a_bs: np.ndarray, priors: PriorCovariances, method: str = "fast"
) -> MseValue:
    """
    MSE of the LMMSE estimate of H,
    Tr{(R_h^-1 + Gamma (A_BS kron I_M)^H (A_BS kron I_M))^-1}, and its value
    normalized by Tr(R_h) = M N beta.

    :param str method: ``fast`` uses M Tr{(beta^-1 I_N + Gamma A_BS^H A_BS)^-1};
        ``naive`` builds the ``MN x MN`` Kronecker system.
    """
    _check_finite_snr(priors)
    M = priors.n_antennas
    prior_energy = M * a_bs.shape[1] * priors.bs_gain
    if method == "fast":
        total = M * _trace_inverse(_bs_information(a_bs, priors))
    elif method == "naive":
        big = kron(a_bs, np.eye(M))
        total = _trace_inverse(
            np.linalg.inv(priors.r_h) + priors.snr * (big.conj().T @ big)
        )
    else:
        raise ValueError(f"Unknown evaluation method {method}.")
    return MseValue(total, total / prior_energy)


def cascaded_from_individual(H_hat: np.ndarray, G_hat: np.ndarray) -> np.ndarray:
    """ ``K x M x N`` stack of C_k = H_hat diag(g_hat_k) """
    H_hat = np.asarray(H_hat)
    G_hat = np.asarray(G_hat)
    if H_hat.ndim != 2 or G_hat.ndim != 2 or H_hat.shape[1] != G_hat.shape[0]:
        raise ValueError(f"Incompatible shapes {H_hat.shape} and {G_hat.shape}.")
    return H_hat[np.newaxis, :, :] * G_hat.T[:, np.newaxis, :]


def squared_error(estimate, truth) -> Tuple[float, float]:
    """ (||estimate - truth||^2, ||truth||^2) summed over all entries """
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"Shape mismatch: {estimate.shape} vs {truth.shape}.")
    return (
        float(np.sum(np.abs(estimate - truth) ** 2)),
        float(np.sum(np.abs(truth) ** 2)),
    )


def nmse(estimate, truth) -> float:
    """ ||estimate - truth||_F^2 / ||truth||_F^2 """
    error, energy = squared_error(estimate, truth)
    if energy == 0:
        raise ValueError("NMSE is undefined for an all-zero truth.")
    return error / energy


def ensemble_nmse(errors: Sequence[float], energies: Sequence[float]) -> float:
    """ Ratio of the averaged error energy to the averaged channel energy """
    errors = np.asarray(errors, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    if errors.shape != energies.shape or errors.size == 0:
        raise ValueError("Need matching, non-empty error and energy sequences.")
    if np.sum(energies) == 0:
        raise ValueError("NMSE is undefined for an all-zero truth.")
    return float(np.mean(errors) / np.mean(energies))
