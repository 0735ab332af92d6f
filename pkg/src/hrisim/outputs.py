from typing import Any, Dict, Optional
import datetime
import json
import logging
import pathlib

import attr
from attr.validators import instance_of
import pandas as pd
import toml

from hrisim.experiments.curve_table import COLUMNS, CurveTable


def default_output_path(study: str, fmt: str) -> pathlib.Path:
    return pathlib.Path(f"hrisim_{study.replace('-', '_')}.{fmt}")


def metadata_path(path: pathlib.Path) -> pathlib.Path:
    """ Sidecar file next to a result file, ``<name>.meta.toml`` """
    return path.with_name(path.name + ".meta.toml")


def read_table(path: pathlib.Path) -> CurveTable:
    """ Load a CurveTable previously written by :class:`OutputWriter` """
    path = pathlib.Path(path)
    if path.suffix == ".json":
        with path.open("r") as f:
            return CurveTable.from_records(json.load(f))
    df = pd.read_csv(
        path,
        dtype={"study": str, "sweep_var": str, "metric": str},
        float_precision="round_trip",
    )
    return CurveTable.from_records(df.to_dict(orient="records"))


@attr.s(slots=True)
class OutputWriter:
    """
    Write a CurveTable as CSV or JSON, plus a TOML sidecar holding the effective
    configuration and the package version.

    :param CurveTable table: Rows to write
    :param dict config: Effective configuration of the run
    :param pathlib.Path path: Result file. Defaults to ``hrisim_<study>.<format>``.
    :param str fmt: ``csv`` or ``json``
    :param bool timestamp: Record the creation time in the sidecar
    """

    table = attr.ib(validator=instance_of(CurveTable), repr=False)
    config = attr.ib(validator=instance_of(dict), repr=False)
    path = attr.ib(default=None)
    fmt = attr.ib(default="csv", validator=instance_of(str))
    timestamp = attr.ib(default=True, validator=instance_of(bool))
    meta_path = attr.ib(init=False)

    def __attrs_post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"Unknown output format '{self.fmt}'.")
        if not self.path:
            self.path = default_output_path(self.config.get("study", "study"), self.fmt)
        self.path = pathlib.Path(self.path)
        self.meta_path = metadata_path(self.path)

    def run(self) -> pathlib.Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.fmt == "csv":
            self.__write_csv()
        else:
            self.__write_json()
        self.__write_metadata()
        logging.info(f"Wrote {len(self.table)} rows to {self.path}.")
        return self.path

    def __write_csv(self):
        df = self.table.to_frame()
        df.to_csv(self.path, index=False, float_format="%.17g", columns=list(COLUMNS))

    def __write_json(self):
        with self.path.open("w") as f:
            json.dump(self.table.to_records(), f, indent=2)
            f.write("\n")

    def metadata(self) -> Dict[str, Any]:
        from hrisim import __version__

        meta: Dict[str, Any] = {
            "version": __version__,
            "rows": len(self.table),
            "format": self.fmt,
        }
        if self.timestamp:
            meta["created"] = datetime.datetime.now().isoformat(timespec="seconds")
        return {"meta": meta, "config": self.config}

    def __write_metadata(self):
        with self.meta_path.open("w") as f:
            toml.dump(self.metadata(), f)


def emit(
    table: CurveTable,
    config: Dict[str, Any],
    path: Optional[pathlib.Path] = None,
    fmt: Optional[str] = None,
    timestamp: Optional[bool] = None,
) -> pathlib.Path:
    """
    Write ``table`` where the configuration's ``[output]`` table says, unless
    overridden by the arguments.
    """
    output = config.get("output", {})
    return OutputWriter(
        table=table,
        config=config,
        path=path or output.get("path") or None,
        fmt=fmt or output.get("format", "csv"),
        timestamp=output.get("timestamp", True) if timestamp is None else timestamp,
    ).run()
