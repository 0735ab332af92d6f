"""
End-to-end HRIS estimation of one sounding record: G at the HRIS, H at the BS
and the cascaded channels composed from both.
"""
from typing import Optional, Tuple
import logging

import attr
from attr.validators import instance_of
import numpy as np

from hrisim.channel.scenario import ChannelRealization
from hrisim.estimation.estimators import (
    EstimationReport,
    FilterForm,
    GSource,
    LmmseFilter,
    PriorCovariances,
    bs_operator,
    cascaded_from_individual,
    closed_mse_g,
    closed_mse_h,
    lmmse_h,
    nmse,
)
from hrisim.estimation.sounding import NoiseModel, SoundingRecord


@attr.s(slots=True)
class HrisEstimator:
    """
    LMMSE pipeline with the HRIS filter cached across trials that share the
    measurement operator, which is the case for all trials of a user drop.

    :param PriorCovariances priors: Channel priors, the SNR field is ignored
    :param NoiseModel noise: Power and noise, each receiver uses its own SNR
    :param GSource g_source: Where the BS takes G from when assembling A_BS
    :param FilterForm form: Expression used for the HRIS filter
    """

    priors = attr.ib(validator=instance_of(PriorCovariances))
    noise = attr.ib(validator=instance_of(NoiseModel))
    g_source = attr.ib(default=GSource.ESTIMATED, converter=GSource)
    form = attr.ib(default=FilterForm.AUTO, converter=FilterForm)
    hris_priors = attr.ib(init=False, repr=False)
    bs_priors = attr.ib(init=False, repr=False)
    _filter = attr.ib(init=False, default=None, repr=False)
    _closed_g = attr.ib(init=False, default=None, repr=False)

    def __attrs_post_init__(self):
        self.hris_priors = self.priors.with_snr(self.noise.snr_sensing)
        self.bs_priors = self.priors.with_snr(self.noise.snr_bs)

    def g_filter(self, a_rc: np.ndarray) -> LmmseFilter:
        """ LMMSE filter of G for ``a_rc``, rebuilt only when the operator changes """
        if self._filter is None or not (
            self._filter.a_rc is a_rc or np.array_equal(self._filter.a_rc, a_rc)
        ):
            logging.debug("Building the HRIS LMMSE filter.")
            self._filter = LmmseFilter(a_rc=a_rc, priors=self.hris_priors, form=self.form)
            self._closed_g = closed_mse_g(a_rc, self.hris_priors).total
        return self._filter

    def estimate(self, record: SoundingRecord) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """ (G_hat, H_hat, C_hat) from one sounding record """
        G_hat = self.g_filter(record.a_rc).apply(record)
        H_hat = lmmse_h(record, self.bs_priors, g_source=self.g_source, G_hat=G_hat)
        return G_hat, H_hat, cascaded_from_individual(H_hat, G_hat)

    def run(
        self, record: SoundingRecord, channels: ChannelRealization
    ) -> EstimationReport:
        """
        Estimate and score against the true channels.

        The closed-form H error is evaluated on the same A_BS the estimator used.

        :param SoundingRecord record: Observations of one estimation phase
        :param ChannelRealization channels: Ground truth
        """
        G_hat, H_hat, C_hat = self.estimate(record)
        a_bs = bs_operator(record, self.g_source, G_hat)
        return EstimationReport(
            G_hat=G_hat,
            H_hat=H_hat,
            C_hat=C_hat,
            nmse_G=nmse(G_hat, channels.G),
            nmse_H=nmse(H_hat, channels.H),
            nmse_C=nmse(C_hat, channels.cascaded()),
            closed_mse_G=self._closed_g,
            closed_mse_H=closed_mse_h(a_bs, self.bs_priors).total,
        )


def estimate_channels(
    record: SoundingRecord,
    channels: ChannelRealization,
    noise: NoiseModel,
    g_source: GSource = GSource.ESTIMATED,
    priors: Optional[PriorCovariances] = None,
) -> EstimationReport:
    """ One-shot convenience wrapper around :class:`HrisEstimator` """
    if priors is None:
        priors = PriorCovariances.from_channels(channels, noise.snr)
    return HrisEstimator(priors=priors, noise=noise, g_source=g_source).run(
        record, channels
    )
