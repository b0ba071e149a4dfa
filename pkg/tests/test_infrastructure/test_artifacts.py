import json

import numpy as np
import pytest

from src.domain.errors import SchemaError
from src.domain.models import StopRule
from src.infrastructure.artifacts import (
    CSV_SCHEMAS,
    schema_check,
    write_matrix_csv,
    write_rounds_csv,
    write_schema_manifest,
    write_summary,
)
from src.services.protocol_leach import LeachProtocol
from src.services.sim_engine import run_simulation


@pytest.fixture
def short_run(small_cfg, radio):
    return run_simulation(small_cfg, LeachProtocol(), radio, StopRule.rounds(12))


class TestWriters:

    def test_rounds_csv(self, tmp_path, short_run):
        path = write_rounds_csv(tmp_path / "rounds.csv", short_run)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_SCHEMAS["rounds"]["columns"])
        assert len(lines) == 13
        assert lines[1].startswith("1,")
        assert schema_check(path) == "rounds"

    def test_summary_carries_schema_version(self, tmp_path, short_run):
        path = write_summary(tmp_path / "summary.json", short_run, {"config": "x"})
        payload = json.loads(path.read_text())
        assert payload["schema_versions"] == {"rounds": 1}
        assert payload["config"] == "x"
        assert payload["rounds"] == 12

    def test_matrix_csv(self, tmp_path):
        path = write_matrix_csv(tmp_path / "m.csv", np.array([[1.0, 2.0], [3.0, np.nan]]), ["a", "b"], [0, 25])
        assert path.read_text().splitlines()[0] == "row,0,25"
        assert schema_check(path) == "matrix"

    def test_manifest(self, tmp_path):
        payload = json.loads(write_schema_manifest(tmp_path).read_text())
        assert payload["csv"]["compare"]["version"] == 1
        assert payload["matrix"]["first_column"] == "row"


class TestSchemaCheck:

    def test_unknown_header(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(SchemaError):
            schema_check(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "sweep.csv"
        path.write_text("alpha,beta,gamma,seed,metric,value\n0,0,0,0,fnd\n")
        with pytest.raises(SchemaError, match=":2:"):
            schema_check(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            schema_check(path)

    def test_non_numeric_matrix(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("row,a\nr0,high\n")
        with pytest.raises(SchemaError):
            schema_check(path)
