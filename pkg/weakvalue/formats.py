import hashlib
import io
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple

import numpy as np

from weakvalue.analysis import SweepRow
from weakvalue.detector import CountMap, DetectionConfig, PixelGrid
from weakvalue.errors import ConfigError

logger = logging.getLogger(__name__)

COUNT_MAP_FORMAT = "weakvalue-countmap/1"
SWEEP_FORMAT = "weakvalue-sweep/1"

SWEEP_COLUMNS = (
    "theta_i",
    "theta_f",
    "aw_h_true",
    "aw_v_true",
    "x_exact",
    "x_order1",
    "x_order3",
    "y_exact",
    "y_order1",
    "y_order3",
    "x_measured",
    "x_stderr",
    "y_measured",
    "y_stderr",
    "p_postselect",
    "divergent_flag",
)

COUNT_MAP_KEYS = (
    "format",
    "seed",
    "shots",
    "efficiency",
    "dark_rate_hz",
    "gate_s",
    "n_x",
    "n_y",
    "pitch",
    "beam_center_x",
    "beam_center_y",
    "total_signal_expected",
)


def config_digest(echo: Sequence[Tuple[str, str]]) -> str:
    """SHA-256 over the canonical `key=value` lines of a configuration echo."""
    canonical = "\n".join(f"{key}={value}" for key, value in echo)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def metadata_lines(items: Iterable[Tuple[str, str]]) -> List[str]:
    return [f"# {key} = {value}" for key, value in items]


def _split_metadata(line: str) -> Optional[Tuple[str, str]]:
    body = line[1:].strip()
    if " = " not in body:
        return None
    key, value = body.split(" = ", 1)
    return key.strip(), value.strip()


def dump_count_map(count_map: CountMap) -> str:
    """Render a count map; floats use repr so reading back is bit-exact."""
    det, grid = count_map.detection, count_map.grid
    fixed = [
        ("format", COUNT_MAP_FORMAT),
        ("seed", str(det.seed)),
        ("shots", str(det.shots)),
        ("efficiency", repr(float(det.efficiency))),
        ("dark_rate_hz", repr(float(det.dark_rate_hz))),
        ("gate_s", repr(float(det.gate_s))),
        ("n_x", str(grid.n_x)),
        ("n_y", str(grid.n_y)),
        ("pitch", repr(float(grid.pitch))),
        ("beam_center_x", repr(float(grid.beam_center[0]))),
        ("beam_center_y", repr(float(grid.beam_center[1]))),
        ("total_signal_expected", repr(float(count_map.total_signal_expected))),
    ]
    lines = metadata_lines(fixed + list(count_map.metadata.items()))
    for row in np.asarray(count_map.counts, dtype=np.int64):
        lines.append(",".join(str(int(value)) for value in row))
    return "\n".join(lines) + "\n"


def load_count_map(text: str, source: str = "<count map>") -> CountMap:
    """Parse the text produced by dump_count_map.

    Raises
    ------
    ConfigError
        If the metadata or the count rows are malformed.
    """
    header: Dict[str, str] = {}
    extra: Dict[str, str] = {}
    rows: List[List[int]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            item = _split_metadata(line)
            if item is None:
                continue
            key, value = item
            (header if key in COUNT_MAP_KEYS else extra)[key] = value
            continue
        try:
            row = [int(value) for value in line.split(",")]
        except ValueError:
            raise ConfigError("counts", f"{source}: non-integer count", number, line) from None
        if any(value < 0 for value in row):
            raise ConfigError("counts", f"{source}: negative count", number, line)
        rows.append(row)

    missing = [key for key in COUNT_MAP_KEYS if key not in header]
    if missing:
        raise ConfigError(missing[0], f"{source}: metadata key {missing[0]!r} is missing")
    if header["format"] != COUNT_MAP_FORMAT:
        raise ConfigError("format", f"{source}: unsupported format {header['format']!r}")
    try:
        grid = PixelGrid(
            int(header["n_x"]),
            int(header["n_y"]),
            float(header["pitch"]),
            (float(header["beam_center_x"]), float(header["beam_center_y"])),
        )
        detection = DetectionConfig(
            shots=int(header["shots"]),
            efficiency=float(header["efficiency"]),
            dark_rate_hz=float(header["dark_rate_hz"]),
            gate_s=float(header["gate_s"]),
            seed=int(header["seed"]),
        )
        total_signal_expected = float(header["total_signal_expected"])
    except ValueError as err:
        raise ConfigError("metadata", f"{source}: {err}") from err

    counts = np.array(rows, dtype=np.int64)
    if counts.shape != grid.shape:
        raise ConfigError("counts", f"{source}: expected {grid.n_x}x{grid.n_y} counts, found shape {counts.shape}")
    return CountMap(counts, total_signal_expected, detection, grid, extra)


def write_count_map(path: str, count_map: CountMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(dump_count_map(count_map))
    logger.debug("wrote %s (%d counts)", path, count_map.total)


def read_count_map(path: str) -> CountMap:
    try:
        with open(path, "r", encoding="utf-8") as stream:
            text = stream.read()
    except OSError as err:
        raise ConfigError("count_map", f"cannot read {path}: {err}") from err
    return load_count_map(text, path)


def _cell(value: Optional[float]) -> str:
    return "" if value is None else f"{float(value):.17e}"


def dump_sweep(rows: Sequence[SweepRow], echo: Mapping[str, str]) -> str:
    """Sweep CSV: metadata, the header row, then one row per post-selection."""
    buffer = io.StringIO()
    write_sweep(buffer, rows, echo)
    return buffer.getvalue()


def write_sweep(stream: TextIO, rows: Sequence[SweepRow], echo: Mapping[str, str]) -> None:
    stream.write("\n".join(metadata_lines([("format", SWEEP_FORMAT)] + list(echo.items()))) + "\n")
    stream.write(",".join(SWEEP_COLUMNS) + "\n")
    for row in rows:
        cells = [_cell(getattr(row, column)) for column in SWEEP_COLUMNS[:-1]]
        cells.append("1" if row.divergent else "0")
        stream.write(",".join(cells) + "\n")
