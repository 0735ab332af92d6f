from typing import Iterable, Iterator, List, Sequence
import math

import attr
from attr.validators import instance_of
import numpy as np
import pandas as pd

COLUMNS = ("study", "sweep_var", "sweep_value", "metric", "mean", "stderr", "trials", "seed")


@attr.s(frozen=True, slots=True)
class CurveRow:
    study = attr.ib(validator=instance_of(str))
    sweep_var = attr.ib(validator=instance_of(str))
    sweep_value = attr.ib(converter=float)
    metric = attr.ib(validator=instance_of(str))
    mean = attr.ib(converter=float)
    stderr = attr.ib(converter=float)
    trials = attr.ib(converter=int)
    seed = attr.ib(converter=int)

    @property
    def key(self):
        return (self.study, self.sweep_value, self.metric)


def mean_and_stderr(samples: Sequence[float]):
    """ Sample mean and its standard error, std / sqrt(n) """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("No samples to summarize.")
    if samples.size == 1:
        return float(samples[0]), 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


def median_and_stderr(samples: Sequence[float]):
    """ Sample median with the large-sample standard error sqrt(pi / 2) std / sqrt(n) """
    samples = np.asarray(samples, dtype=np.float64)
    _, stderr = mean_and_stderr(samples)
    return float(np.median(samples)), math.sqrt(math.pi / 2) * stderr


def ratio_and_stderr(numerators: Sequence[float], denominators: Sequence[float]):
    """
    Ratio of means with a delta-method standard error,
    std(x - R y) / (sqrt(n) mean(y)).
    """
    num = np.asarray(numerators, dtype=np.float64)
    den = np.asarray(denominators, dtype=np.float64)
    if num.shape != den.shape or num.size == 0:
        raise ValueError("Need matching, non-empty samples.")
    ratio = num.mean() / den.mean()
    if num.size == 1:
        return float(ratio), 0.0
    resid = num - ratio * den
    return float(ratio), float(resid.std(ddof=1) / (math.sqrt(num.size) * den.mean()))


@attr.s(slots=True)
class CurveTable:
    """
    Plot-ready rows of a study, unique by (study, sweep value, metric).
    """

    rows = attr.ib(factory=list, validator=instance_of(list))
    _keys = attr.ib(init=False, factory=set, repr=False)

    def __attrs_post_init__(self):
        rows, self.rows = self.rows, []
        for row in rows:
            self.add(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self) -> Iterator[CurveRow]:
        return iter(self.rows)

    def add(self, row: CurveRow):
        if row.key in self._keys:
            raise ValueError(f"Duplicate row for {row.key}.")
        self._keys.add(row.key)
        self.rows.append(row)

    def add_value(self, study, sweep_var, sweep_value, metric, mean, stderr, trials, seed):
        self.add(
            CurveRow(
                study=study,
                sweep_var=sweep_var,
                sweep_value=sweep_value,
                metric=metric,
                mean=mean,
                stderr=stderr,
                trials=trials,
                seed=seed,
            )
        )

    def extend(self, rows: Iterable[CurveRow]):
        for row in rows:
            self.add(row)

    def metrics(self) -> List[str]:
        return list(dict.fromkeys(row.metric for row in self.rows))

    def curve(self, metric: str) -> pd.DataFrame:
        """ Rows of one metric ordered by the sweep value """
        df = self.to_frame()
        return df[df["metric"] == metric].sort_values("sweep_value").reset_index(drop=True)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [attr.astuple(row) for row in self.rows], columns=list(COLUMNS)
        )

    def to_records(self) -> List[dict]:
        return [attr.asdict(row) for row in self.rows]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "CurveTable":
        return cls(rows=[CurveRow(**record) for record in records])
