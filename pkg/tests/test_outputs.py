import json

import pytest
import toml

from hrisim import __version__
from hrisim.config.config_parser import Config
from hrisim.experiments.curve_table import COLUMNS, CurveTable
from hrisim.outputs import OutputWriter, default_output_path, emit, metadata_path, read_table


@pytest.fixture
def table():
    table = CurveTable()
    table.add_value("snr-sweep", "snr_db", 0.0, "nmse_C/hris", 0.123456789012345, 1e-3, 10, 7)
    table.add_value("snr-sweep", "snr_db", 2.0, "nmse_C/hris", 0.1, 1e-3, 10, 7)
    table.add_value("snr-sweep", "nmse_level", 0.01, "snr_gain_db", 9.5, 0.0, 10, 7)
    return table


@pytest.fixture
def config():
    return Config.default().config_data


class TestPaths:
    def test_default_name(self):
        assert str(default_output_path("snr-sweep", "csv")) == "hrisim_snr_sweep.csv"

    def test_sidecar(self, tmp_path):
        assert metadata_path(tmp_path / "run.json") == tmp_path / "run.json.meta.toml"


class TestOutputWriter:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_table_survives(self, tmp_path, table, config, fmt):
        path = OutputWriter(table, config, tmp_path / f"out.{fmt}", fmt).run()
        restored = read_table(path)
        assert restored.rows == table.rows

    def test_csv_header(self, tmp_path, table, config):
        path = OutputWriter(table, config, tmp_path / "out.csv").run()
        header = path.read_text().splitlines()[0]
        assert header == ",".join(COLUMNS)

    def test_json_records(self, tmp_path, table, config):
        path = OutputWriter(table, config, tmp_path / "out.json", "json").run()
        records = json.loads(path.read_text())
        assert records[2]["metric"] == "snr_gain_db"
        assert records[2]["sweep_var"] == "nmse_level"

    def test_metadata(self, tmp_path, table, config):
        writer = OutputWriter(table, config, tmp_path / "out.csv", timestamp=False)
        writer.run()
        meta = toml.load(writer.meta_path)
        assert meta["meta"]["version"] == __version__
        assert meta["meta"]["rows"] == 3
        assert "created" not in meta["meta"]
        assert meta["config"]["system"]["N"] == 64

    def test_timestamp(self, tmp_path, table, config):
        writer = OutputWriter(table, config, tmp_path / "out.csv")
        writer.run()
        assert "created" in toml.load(writer.meta_path)["meta"]

    def test_creates_parents(self, tmp_path, table, config):
        path = OutputWriter(table, config, tmp_path / "a" / "b" / "out.csv").run()
        assert path.exists()

    def test_unknown_format(self, tmp_path, table, config):
        with pytest.raises(ValueError):
            OutputWriter(table, config, tmp_path / "out.xlsx", "xlsx")

    def test_default_path(self, tmp_path, table, config, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = OutputWriter(table, config).run()
        assert (tmp_path / path).exists()
        assert path.name == "hrisim_snr_sweep.csv"


class TestEmit:
    def test_uses_output_section(self, tmp_path, table, config):
        config["output"]["path"] = str(tmp_path / "from_config.json")
        config["output"]["format"] = "json"
        path = emit(table, config)
        assert path == tmp_path / "from_config.json"
        assert json.loads(path.read_text())[0]["study"] == "snr-sweep"

    def test_deterministic_without_timestamp(self, tmp_path, table, config):
        first = emit(table, config, tmp_path / "one.csv", timestamp=False)
        second = emit(table, config, tmp_path / "two.csv", timestamp=False)
        assert first.read_bytes() == second.read_bytes()
        assert metadata_path(first).read_bytes() == metadata_path(second).read_bytes()
