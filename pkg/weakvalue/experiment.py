import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from weakvalue.analysis import postselection_angles, weak_value_grid
from weakvalue.config import Config
from weakvalue.detector import DetectionConfig
from weakvalue.errors import ConfigError, InvalidArgumentError
from weakvalue.formats import config_digest
from weakvalue.meter import CouplingConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfigEntry:
    value: str
    source: str
    line_number: Optional[int] = None
    line: Optional[str] = None

    def error(self, field: str, message: str) -> ConfigError:
        return ConfigError(field, f'{self.source}: {message}', self.line_number, self.line)


def parse_angle(text: str) -> float:
    """Radians, or degrees with a `deg` suffix."""
    text = text.strip()
    if text.endswith('deg'):
        value = math.radians(float(text[:-3]))
    else:
        value = float(text)
    if not math.isfinite(value):
        raise ValueError(f'angle {text!r} is not finite')
    return value


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f'{text!r} is not finite')
    return value


def _parse_angles(text: str) -> Tuple[float, ...]:
    values = tuple(parse_angle(part) for part in text.split(',') if part.strip())
    if not values:
        raise ValueError('empty angle list')
    return values


def _parse_range(text: str) -> Tuple[float, float, int]:
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f'expected lo:hi:n, got {text!r}')
    count = int(parts[2])
    if count < 1:
        raise ValueError(f'point count must be >= 1, got {count}')
    return _parse_float(parts[0]), _parse_float(parts[1]), count


def _parse_interval(text: str) -> Tuple[float, float]:
    parts = text.split(':')
    if len(parts) != 2:
        raise ValueError(f'expected lo:hi, got {text!r}')
    return _parse_float(parts[0]), _parse_float(parts[1])


PARSERS: Dict[str, Callable[[str], object]] = {
    'preset': str.strip,
    'theta_i': parse_angle,
    'theta_f': _parse_angles,
    'aw_range': _parse_range,
    'a_x': _parse_float,
    'a_y': _parse_float,
    'sigma': _parse_float,
    'shots': int,
    'efficiency': _parse_float,
    'dark_rate_hz': _parse_float,
    'gate_s': _parse_float,
    'seed': int,
    'epsilon': _parse_float,
    'search': _parse_interval,
    'output': str.strip,
}


@dataclass(frozen=True)
class ExperimentConfig:
    a_x: float
    a_y: float
    sigma: float
    preset: Optional[str] = None
    theta_i: float = Config.Defaults.theta_i
    theta_f: Optional[Tuple[float, ...]] = None
    aw_range: Optional[Tuple[float, float, int]] = None
    shots: Optional[int] = None
    efficiency: float = Config.Defaults.efficiency
    dark_rate_hz: float = Config.Defaults.dark_rate_hz
    gate_s: float = Config.Defaults.gate_s
    seed: int = 0
    epsilon: float = Config.Defaults.epsilon
    search: Tuple[float, float] = Config.Defaults.search
    output: Optional[str] = None

    @property
    def coupling(self) -> CouplingConfig:
        return CouplingConfig(self.a_x, self.a_y, self.sigma)

    @property
    def detection(self) -> Optional[DetectionConfig]:
        """Monte Carlo settings, present only when shots were configured."""
        if self.shots is None:
            return None
        return DetectionConfig(self.shots, self.efficiency, self.dark_rate_hz, self.gate_s, self.seed)

    def postselection_angles(self) -> List[float]:
        """Explicit theta_f values, else angles realising an evenly spaced weak-value range."""
        if self.theta_f is not None:
            return list(self.theta_f)
        if self.aw_range is not None:
            try:
                return postselection_angles(self.theta_i, weak_value_grid(*self.aw_range))
            except InvalidArgumentError as err:
                raise ConfigError('theta_i', f'aw_range cannot be realised: {err.message}') from err
        raise ConfigError('theta_f', 'a post-selection is required: set theta_f or aw_range')

    def echo(self) -> Dict[str, str]:
        """Effective configuration as ordered `key -> text`, enough to re-run the command."""
        items: Dict[str, str] = {}
        if self.preset is not None:
            items['preset'] = self.preset
        items['a_x'] = repr(self.a_x)
        items['a_y'] = repr(self.a_y)
        items['sigma'] = repr(self.sigma)
        items['theta_i'] = repr(self.theta_i)
        if self.theta_f is not None:
            items['theta_f'] = ','.join(repr(v) for v in self.theta_f)
        if self.aw_range is not None:
            items['aw_range'] = f'{self.aw_range[0]!r}:{self.aw_range[1]!r}:{self.aw_range[2]}'
        if self.shots is not None:
            items['shots'] = str(self.shots)
            items['efficiency'] = repr(self.efficiency)
            items['dark_rate_hz'] = repr(self.dark_rate_hz)
            items['gate_s'] = repr(self.gate_s)
            items['seed'] = str(self.seed)
        items['epsilon'] = repr(self.epsilon)
        items['search'] = f'{self.search[0]!r}:{self.search[1]!r}'
        return items

    def metadata(self) -> Dict[str, str]:
        """Echo plus derived couplings and a digest of the echo."""
        echo = self.echo()
        coupling = self.coupling
        items = dict(echo)
        items['g_x'] = f'{coupling.g_x:.6f}'
        items['g_y'] = f'{coupling.g_y:.6f}'
        items['weak_regime_advisory'] = 'true' if coupling.weak_regime_advisory else 'false'
        items['config_hash'] = config_digest(list(echo.items()))
        return items

    @classmethod
    def from_entries(cls, entries: Mapping[str, ConfigEntry]) -> 'ExperimentConfig':
        """Validate raw entries into a configuration.

        Raises
        ------
        ConfigError
            Naming the offending key (and file line when it came from a file)
            for unknown keys, type mismatches, missing couplings or values
            outside their domain.
        """
        values: Dict[str, object] = {}
        for key, entry in entries.items():
            parser = PARSERS.get(key)
            if parser is None:
                raise entry.error(key, f'unknown key {key!r}')
            try:
                values[key] = parser(entry.value)
            except ValueError as err:
                raise entry.error(key, f'invalid value {entry.value!r}: {err}') from None

        def fail(key: str, message: str) -> ConfigError:
            entry = entries.get(key)
            return entry.error(key, message) if entry is not None else ConfigError(key, message)

        if 'preset' in values:
            try:
                a_x, a_y, sigma = Config.preset(str(values['preset']))
            except ConfigError as err:
                raise fail('preset', err.message) from None
            values.setdefault('a_x', a_x)
            values.setdefault('a_y', a_y)
            values.setdefault('sigma', sigma)
        for key in ('a_x', 'a_y', 'sigma'):
            if key not in values:
                raise ConfigError(key, f'missing required key {key!r} (or set preset)')

        if not values['sigma'] > 0:
            raise fail('sigma', f'sigma must be positive, got {values["sigma"]!r}')
        for key in ('a_x', 'a_y'):
            if values[key] < 0:
                raise fail(key, f'{key} must be >= 0, got {values[key]!r}')
        if 'shots' in values and values['shots'] < 1:
            raise fail('shots', f'shots must be >= 1, got {values["shots"]!r}')
        if 'efficiency' in values and not 0.0 <= values['efficiency'] <= 1.0:
            raise fail('efficiency', f'efficiency must lie in [0, 1], got {values["efficiency"]!r}')
        if 'dark_rate_hz' in values and values['dark_rate_hz'] < 0:
            raise fail('dark_rate_hz', f'dark_rate_hz must be >= 0, got {values["dark_rate_hz"]!r}')
        if 'gate_s' in values and not values['gate_s'] > 0:
            raise fail('gate_s', f'gate_s must be positive, got {values["gate_s"]!r}')
        if 'seed' in values and values['seed'] < 0:
            raise fail('seed', f'seed must be >= 0, got {values["seed"]!r}')
        if 'epsilon' in values and not values['epsilon'] > 0:
            raise fail('epsilon', f'epsilon must be positive, got {values["epsilon"]!r}')

        config = cls(**values)
        if config.coupling.weak_regime_advisory:
            logger.warning(
                'g_x=%.4f, g_y=%.4f: coupling near the border of the weak regime',
                config.coupling.g_x,
                config.coupling.g_y,
            )
        return config


def load_config_entries(text: str, source: str = '<config>') -> Dict[str, ConfigEntry]:
    """Split experiment-file text into entries, keeping line numbers for errors."""
    entries: Dict[str, ConfigEntry] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('<syntax>', f'{source}: expected `key = value`', number, raw)
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in PARSERS:
            raise ConfigError(key, f'{source}: unknown key {key!r}', number, raw)
        if key in entries:
            raise ConfigError(key, f'{source}: duplicate key {key!r}', number, raw)
        entries[key] = ConfigEntry(value, source, number, raw)
    return entries


def read_config_entries(path: str) -> Dict[str, ConfigEntry]:
    try:
        with open(path, 'r', encoding='utf-8') as stream:
            text = stream.read()
    except (OSError, UnicodeDecodeError) as err:
        raise ConfigError('config', f'cannot read {path}: {err}') from err
    return load_config_entries(text, path)


def parse_config(path: Optional[str], overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read an experiment file (optional) and apply flag overrides on top.

    Parameters
    ----------
    path:
        Experiment file, or None to build from overrides alone.
    overrides:
        `key -> text` values from the command line; they replace file values.

    Raises
    ------
    ConfigError
        For unreadable files and every validation failure.
    """
    entries = read_config_entries(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        entries[key] = ConfigEntry(value, f'--{key.replace("_", "-")}')
    return ExperimentConfig.from_entries(entries)
