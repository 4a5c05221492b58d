import numpy as np
import pytest

from weakvalue.analysis import SweepRow, sweep_postselection
from weakvalue.detector import CountMap, DetectionConfig, PixelGrid, pixel_probability_map, simulate_counts
from weakvalue.errors import ConfigError
from weakvalue.formats import (
    COUNT_MAP_FORMAT,
    SWEEP_COLUMNS,
    config_digest,
    dump_count_map,
    dump_sweep,
    load_count_map,
    read_count_map,
    write_count_map,
)
from tests import common


@pytest.fixture
def count_map(thick, anomalous_states):
    probmap = pixel_probability_map(*anomalous_states, thick)
    counts = simulate_counts(probmap, DetectionConfig(shots=100_000, efficiency=0.8, seed=1234))
    counts.metadata["config_hash"] = "abc"
    return counts


def test_count_map_file_reads_back_identically(tmp_path, count_map):
    path = str(tmp_path / "counts.csv")
    write_count_map(path, count_map)
    loaded = read_count_map(path)
    assert loaded == count_map
    assert loaded.metadata == {"rng": "PCG64", "config_hash": "abc"}
    assert loaded.total_signal_expected == count_map.total_signal_expected


def test_count_map_layout(count_map):
    text = dump_count_map(count_map)
    lines = text.splitlines()
    assert lines[0] == f"# format = {COUNT_MAP_FORMAT}"
    rows = [line for line in lines if not line.startswith("#")]
    assert len(rows) == 32
    assert all(len(row.split(",")) == 32 for row in rows)
    assert text == dump_count_map(count_map)


def test_count_map_wrong_shape(count_map):
    text = dump_count_map(count_map)
    truncated = "\n".join(text.splitlines()[:-1]) + "\n"
    with pytest.raises(ConfigError) as err:
        load_count_map(truncated)
    assert err.value.field == "counts"


def test_count_map_bad_cell(count_map):
    lines = dump_count_map(count_map).splitlines()
    lines[-1] = "x," + lines[-1].split(",", 1)[1]
    with pytest.raises(ConfigError) as err:
        load_count_map("\n".join(lines))
    assert err.value.field == "counts"
    assert err.value.line_number == len(lines)

    lines[-1] = "-1," + lines[-1].split(",", 1)[1]
    with pytest.raises(ConfigError) as err:
        load_count_map("\n".join(lines))
    assert "negative" in err.value.message


def test_count_map_missing_metadata(count_map):
    text = "\n".join(line for line in dump_count_map(count_map).splitlines() if not line.startswith("# shots"))
    with pytest.raises(ConfigError) as err:
        load_count_map(text)
    assert err.value.field == "shots"


def test_count_map_unknown_format(count_map):
    text = dump_count_map(count_map).replace(COUNT_MAP_FORMAT, "other/9")
    with pytest.raises(ConfigError) as err:
        load_count_map(text)
    assert err.value.field == "format"


def test_read_count_map_missing_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        read_count_map(str(tmp_path / "missing.csv"))
    assert err.value.field == "count_map"


def test_small_grid_count_map():
    counts = CountMap(
        np.arange(6, dtype=np.int64).reshape(2, 3),
        12.5,
        DetectionConfig(shots=7, seed=2),
        PixelGrid(2, 3, 1.0, (1.0, 1.5)),
    )
    assert load_count_map(dump_count_map(counts)) == counts


def test_config_digest():
    echo = [("preset", "thin"), ("seed", "42")]
    digest = config_digest(echo)
    assert len(digest) == 64
    assert digest == config_digest(list(echo))
    assert digest != config_digest([("preset", "thin"), ("seed", "43")])


def test_sweep_csv(thin):
    angles = [common.ANOMALOUS_THETA_F, common.ORTHOGONAL_THETA_F]
    rows = sweep_postselection(common.THETA_I, angles, thin)
    text = dump_sweep(rows, {"preset": "thin", "config_hash": "abc"})
    lines = text.splitlines()
    assert lines[:3] == ["# format = weakvalue-sweep/1", "# preset = thin", "# config_hash = abc"]
    assert lines[3] == ",".join(SWEEP_COLUMNS)
    anomalous = lines[4].split(",")
    divergent = lines[5].split(",")
    assert len(anomalous) == len(SWEEP_COLUMNS) == 16
    assert float(anomalous[SWEEP_COLUMNS.index("aw_h_true")]) == pytest.approx(2.5)
    assert anomalous[SWEEP_COLUMNS.index("x_measured")] == ""
    assert anomalous[-1] == "0"
    assert divergent[-1] == "1"
    assert divergent[SWEEP_COLUMNS.index("x_exact")] == ""


def test_sweep_csv_cells_are_exact():
    row = SweepRow(theta_i=0.1, theta_f=0.2, x_exact=1.0 / 3.0)
    cells = dump_sweep([row], {}).splitlines()[2].split(",")
    assert float(cells[SWEEP_COLUMNS.index("x_exact")]) == 1.0 / 3.0
