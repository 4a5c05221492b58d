import math
import os
from typing import Optional

from weakvalue.errors import ConfigError

THREADS_ENV = "WEAKVAL_THREADS"


class Config:
    """
    Simulator runtime configuration and calibrated constants
    """

    class Presets():
        # (a_x, a_y, sigma) in detector pixels
        thin = (0.7, 0.7, 4.3)
        thick = (1.9, 1.7, 4.3)

    class Defaults():
        divergence_tolerance = 1e-10
        sweep_divergence = 1e-6
        postselection_floor = 1e-12
        grid_size = 32
        beam_center = (15.5, 15.5)
        dark_rate_hz = 100.0
        gate_s = 6e-9
        efficiency = 1.0
        theta_i = math.pi / 4
        epsilon = 0.05
        search = (-6.0, 6.0)
        inversion_bracket = (-50.0, 50.0)
        weak_regime_g = 0.25

    def __init__(self, threads: Optional[int] = None) -> None:
        """
        Parameters
        ----------
        threads:
            Upper bound on worker threads. Falls back to WEAKVAL_THREADS;
            0 or unset means the pool picks its own size.
        """
        self.threads = threads_from_env() if threads is None else threads
        if self.threads is not None and self.threads < 0:
            raise ConfigError('threads', f'thread count must be >= 0, got {self.threads}')
        self.presets = self.Presets()
        self.defaults = self.Defaults()

    @property
    def max_workers(self) -> Optional[int]:
        return self.threads or None

    @classmethod
    def preset(cls, name: str) -> tuple:
        values = None if name.startswith('_') else getattr(cls.Presets, name, None)
        if not isinstance(values, tuple):
            raise ConfigError('preset', f'unknown preset {name!r}, expected one of: thin, thick')
        return values


def threads_from_env() -> Optional[int]:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == '':
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f'expected an integer, got {raw!r}') from None
