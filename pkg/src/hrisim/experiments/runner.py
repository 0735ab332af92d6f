"""
Process-level parallelism over independent work units.
"""
from collections import namedtuple
from typing import Any, Callable, List, Sequence
import logging
import multiprocessing as mp

import attr
from attr.validators import instance_of
import psutil
from tqdm import tqdm

#: One grid point of a sweep simulated for the trials of one user drop
WorkUnit = namedtuple("WorkUnit", "spec, sweep_idx, drop")


def resolve_processes(parallelism: str, unit_bytes: int = 0) -> int:
    """
    Number of worker processes for a parallelism setting.

    :param str parallelism: ``auto``, ``strict`` or a positive integer
    :param int unit_bytes: Working-set estimate of one work unit. Caps ``auto`` so
        that all workers fit in half the available memory.
    """
    parallelism = str(parallelism)
    if parallelism == "strict":
        return 1
    if parallelism != "auto":
        processes = int(parallelism)
        if processes < 1:
            raise ValueError(f"Can't run with {processes} processes.")
        return processes
    processes = psutil.cpu_count(logical=False) or mp.cpu_count()
    if unit_bytes > 0:
        try:
            avail = psutil.virtual_memory().available
        except AttributeError:
            avail = 1_000_000_000
        processes = min(processes, max(1, (avail // 2) // unit_bytes))
    return max(1, int(processes))


@attr.s(slots=True)
class MonteCarloRunner:
    """
    Map a module-level worker over work units, in parallel or sequentially.

    Results always come back in unit order and every unit seeds its own
    generators, so the reduction done by the caller is identical for any number
    of processes.

    :param str parallelism: ``auto``, ``strict`` or a number of processes
    :param int unit_bytes: Working-set estimate of one unit, see :func:`resolve_processes`
    :param str desc: Progress bar label
    """

    parallelism = attr.ib(default="auto", converter=str)
    unit_bytes = attr.ib(default=0, validator=instance_of(int))
    desc = attr.ib(default="Simulating", validator=instance_of(str))
    processes = attr.ib(init=False)

    def __attrs_post_init__(self):
        self.processes = resolve_processes(self.parallelism, self.unit_bytes)

    def map(self, func: Callable[[Any], Any], units: Sequence[Any]) -> List[Any]:
        units = list(units)
        processes = min(self.processes, len(units))
        tq = tqdm(total=len(units), desc=self.desc, unit="unit", leave=False, disable=None)
        results = []
        if processes <= 1:
            for unit in units:
                results.append(func(unit))
                tq.update(1)
        else:
            logging.info(f"Running {len(units)} work units over {processes} processes.")
            with mp.Pool(processes) as pool:
                for result in pool.imap(func, units):
                    results.append(result)
                    tq.update(1)
        tq.close()
        return results
