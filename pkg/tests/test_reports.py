import json

import numpy as np
import pytest

from repscat.grid import build_grid
from repscat.potential import free
from repscat.reports import (SCHEMA_VERSION, ConfigError, energies, load_config,
                             parse_config_text, read_field, write_csv, write_field, write_json)

TEXT = """
# comment
potential.alpha = 1.0
potential.family = power   ; inline comment
potential.coupling = 0.3
spectral.lambdas = 0.5, 1, 2
grid.ppw = 64
job.oracle = false
seed = 7
"""


def test_grammar():
    cfg = parse_config_text(TEXT)
    assert cfg["potential"] == {"alpha": 1.0, "family": "power", "coupling": 0.3}
    assert cfg["spectral"]["lambdas"] == [0.5, 1, 2]
    assert cfg["grid"]["ppw"] == 64
    assert cfg["job"] == {"oracle": False, "seed": 7}


@pytest.mark.parametrize("spectral, expected", [
    ({"lambdas": [0.5, 1]}, [0.5, 1.0]),
    ({"lambdas": 2}, [2.0]),
    ({"lambdas": ""}, []),
    ({"range": "0.5:2:4"}, [0.5, 1.0, 1.5, 2.0]),
    ({}, []),
])
def test_energies(spectral, expected):
    assert energies(spectral) == pytest.approx(expected)


def test_bad_range():
    with pytest.raises(ConfigError):
        energies({"range": "1:2"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_json_and_csv_versioned(tmp_path):
    p = write_json(tmp_path / "a.json", {"x": np.float64(1.5), "z": 1 + 2j, "v": np.arange(3)})
    data = json.loads(p.read_text())
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["z"] == [1.0, 2.0] and data["v"] == [0, 1, 2]
    c = write_csv(tmp_path / "a.csv", [{"a": 1, "b": 2}], ["a", "b"])
    lines = c.read_text().splitlines()
    assert lines[0] == "schema_version,a,b"
    assert lines[1] == f"{SCHEMA_VERSION},1,2"


def test_field_round_trip(tmp_path):
    g = build_grid(free(1.0), 1.0, 30.0, ppw=12.0)
    u = g.from_function(lambda x: np.exp(-x ** 2) * (1 + 1j * x), "probe")
    path = write_field(tmp_path / "u.bin", u, extra={"lambda": 1.0})
    header, x, values = read_field(path)
    assert header["schema_version"] == SCHEMA_VERSION
    assert header["label"] == "probe" and header["extra"]["lambda"] == 1.0
    assert np.array_equal(x, g.x) and np.array_equal(values, u.values)
