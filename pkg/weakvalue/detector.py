import logging
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from weakvalue.config import Config
from weakvalue.errors import (
    InsufficientCountsError,
    InternalConsistencyError,
    InvalidArgumentError,
    VanishingPostselectionError,
)
from weakvalue.meter import CouplingConfig
from weakvalue.pointer import bin_integrals, overlap_defect
from weakvalue.polarization import PolarizationState, branch_amplitudes, make_linear_state

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
NEGATIVE_PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PixelGrid:
    """Square-pitch pixel array; pixel (i, j) covers [i, i+1) x [j, j+1) in pitch units."""

    n_x: int = Config.Defaults.grid_size
    n_y: int = Config.Defaults.grid_size
    pitch: float = 1.0
    beam_center: Tuple[float, float] = Config.Defaults.beam_center

    def __post_init__(self) -> None:
        if self.n_x < 1 or self.n_y < 1:
            raise InvalidArgumentError(f'grid needs at least one pixel per axis, got {self.n_x}x{self.n_y}')
        if not self.pitch > 0:
            raise InvalidArgumentError(f'pitch must be positive, got {self.pitch!r}')

    @classmethod
    def centered(cls, n_x: int = Config.Defaults.grid_size, n_y: Optional[int] = None) -> 'PixelGrid':
        n_y = n_x if n_y is None else n_y
        return cls(n_x, n_y, 1.0, (n_x / 2.0, n_y / 2.0))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_x, self.n_y

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    def edges(self, axis: int) -> np.ndarray:
        count = self.n_x if axis == 0 else self.n_y
        return np.arange(count + 1, dtype=float) * self.pitch

    def centers(self, axis: int) -> np.ndarray:
        count = self.n_x if axis == 0 else self.n_y
        return (np.arange(count, dtype=float) + 0.5) * self.pitch


@dataclass(frozen=True)
class DetectionConfig:
    shots: int
    efficiency: float = Config.Defaults.efficiency
    dark_rate_hz: float = Config.Defaults.dark_rate_hz
    gate_s: float = Config.Defaults.gate_s
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise InvalidArgumentError(f'shots must be >= 1, got {self.shots!r}')
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidArgumentError(f'efficiency must lie in [0, 1], got {self.efficiency!r}')
        if not self.dark_rate_hz >= 0.0:
            raise InvalidArgumentError(f'dark_rate_hz must be >= 0, got {self.dark_rate_hz!r}')
        if not self.gate_s > 0.0:
            raise InvalidArgumentError(f'gate_s must be positive, got {self.gate_s!r}')
        if self.seed < 0:
            raise InvalidArgumentError(f'seed must be >= 0, got {self.seed!r}')

    @property
    def dark_mean_per_pixel(self) -> float:
        """Expected dark counts per pixel over the whole acquisition."""
        return self.shots * self.dark_rate_hz * self.gate_s


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-pixel landing probabilities of a post-selected photon, indexed [i, j] = [x, y]."""

    probabilities: np.ndarray
    truncation_mass: float
    postselection_probability: float
    grid: PixelGrid = field(default_factory=PixelGrid)

    def marginal_centroid(self) -> Tuple[float, float]:
        """Centroid of the map relative to the beam center."""
        x = float(self.probabilities.sum(axis=1) @ self.grid.centers(0)) - self.grid.beam_center[0]
        y = float(self.probabilities.sum(axis=0) @ self.grid.centers(1)) - self.grid.beam_center[1]
        return x, y


@dataclass(frozen=True, eq=False)
class CountMap:
    counts: np.ndarray
    total_signal_expected: float
    detection: DetectionConfig
    grid: PixelGrid = field(default_factory=PixelGrid)
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CountMap)
            and np.array_equal(self.counts, other.counts)
            and self.counts.dtype == other.counts.dtype
            and self.total_signal_expected == other.total_signal_expected
            and self.detection == other.detection
            and self.grid == other.grid
            and self.metadata == other.metadata
        )


class CentroidEstimate(NamedTuple):
    x: float
    y: float
    stderr_x: float
    stderr_y: float
    n_used: float


class ShiftCalibration(NamedTuple):
    a_x: float
    a_y: float
    stderr_a_x: float
    stderr_a_y: float


def pixel_probability_map(
    psi_i: PolarizationState,
    psi_f: PolarizationState,
    config: CouplingConfig,
    grid: Optional[PixelGrid] = None,
) -> ProbabilityMap:
    """Probability that a post-selected photon fires pixel (i, j).

    The post-selected intensity is |z_H|^2 G_ax(x) G_0(y) + |z_V|^2 G_0(x) G_ay(y)
    + 2 Re(z_H z_V*) H_x(x) H_y(y), with every factor separable, so each pixel is
    a product of one-dimensional bin integrals. The result is conditioned on
    post-selection success and renormalized over the grid; the mass falling
    outside the grid is reported as truncation_mass.

    Raises
    ------
    VanishingPostselectionError
        If the post-selection probability is not above 1e-12.
    InternalConsistencyError
        If a pixel probability comes out below -1e-12.
    """
    grid = PixelGrid() if grid is None else grid
    z_h, z_v = branch_amplitudes(psi_i, psi_f)
    cross = (z_h * z_v.conjugate()).real
    defect_xy = overlap_defect(np.hypot(config.a_x, config.a_y), config.sigma)
    probability = abs(z_h + z_v) ** 2 - 2.0 * cross * defect_xy
    if probability <= Config.Defaults.postselection_floor:
        raise VanishingPostselectionError(probability)

    edges_x = grid.edges(0) - grid.beam_center[0]
    edges_y = grid.edges(1) - grid.beam_center[1]
    x_terms = bin_integrals(config.a_x, config.sigma, edges_x[:-1], edges_x[1:])
    y_terms = bin_integrals(config.a_y, config.sigma, edges_y[:-1], edges_y[1:])

    raw = (
        abs(z_h) ** 2 * np.outer(x_terms.i_shift, y_terms.i_zero)
        + abs(z_v) ** 2 * np.outer(x_terms.i_zero, y_terms.i_shift)
        + 2.0 * cross * np.outer(x_terms.i_cross, y_terms.i_cross)
    ) / probability
    lowest = float(raw.min())
    if lowest < -NEGATIVE_PROBABILITY_TOLERANCE:
        raise InternalConsistencyError(f'pixel probability {lowest:.3e} is negative')
    raw = np.clip(raw, 0.0, None)
    inside = float(raw.sum())
    truncation = max(0.0, 1.0 - inside)
    logger.debug('probability map on %dx%d grid, truncation mass %.3e', grid.n_x, grid.n_y, truncation)
    return ProbabilityMap(raw / inside, truncation, probability, grid)


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed for stream `index` of a run seeded with `seed`."""
    child = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(child.generate_state(1, np.uint64)[0])


def simulate_counts(probmap: ProbabilityMap, det: DetectionConfig) -> CountMap:
    """Monte Carlo realization of one acquisition.

    Heralded triggers survive post-selection with Binomial(shots, p_post), are
    detected with Binomial(., efficiency) and distributed over pixels by one
    multinomial draw; every pixel then adds Poisson(shots dark_rate gate) dark
    counts. All draws come from a single PCG64 stream seeded by det.seed.
    """
    rng = _generator(det.seed)
    probabilities = np.asarray(probmap.probabilities, dtype=float)
    postselected = rng.binomial(det.shots, min(1.0, probmap.postselection_probability))
    detected = rng.binomial(postselected, det.efficiency)
    signal = rng.multinomial(detected, probabilities.ravel()).reshape(probabilities.shape)
    dark = rng.poisson(det.dark_mean_per_pixel, size=probabilities.shape)
    counts = (signal + dark).astype(np.int64)
    logger.debug('seed %d: %d signal and %d dark counts', det.seed, int(signal.sum()), int(dark.sum()))
    return CountMap(
        counts=counts,
        total_signal_expected=det.shots * probmap.postselection_probability * det.efficiency,
        detection=det,
        grid=probmap.grid,
        metadata={'rng': RNG_ALGORITHM},
    )


def expected_count_map(probmap: ProbabilityMap, det: DetectionConfig) -> CountMap:
    """Noiseless count map: expected signal plus expected dark counts, rounded to integers."""
    expected = det.shots * probmap.postselection_probability * det.efficiency
    counts = np.rint(expected * probmap.probabilities + det.dark_mean_per_pixel).astype(np.int64)
    return CountMap(counts, expected, det, probmap.grid, {'rng': 'none'})


def centroid_estimate(counts: CountMap, background: Optional[float] = None) -> CentroidEstimate:
    """Centroid of a count map relative to the beam center.

    Parameters
    ----------
    counts:
        Count map to analyse.
    background:
        Optional flat per-pixel background (counts) subtracted before the
        estimate; pixels are clamped at zero.

    Returns
    -------
    estimate:
        Marginal means, their standard errors (sample standard deviation over
        sqrt(N)) and the number of counts N used.

    Raises
    ------
    InsufficientCountsError
        If fewer than two counts remain.
    """
    weights = counts.counts.astype(float)
    if background:
        weights = np.clip(weights - background, 0.0, None)
    total = float(weights.sum())
    if total < 2.0:
        raise InsufficientCountsError(f'{total:g} counts left after background subtraction, need at least 2')

    grid = counts.grid
    xs, ys = grid.centers(0), grid.centers(1)
    marginal_x, marginal_y = weights.sum(axis=1), weights.sum(axis=0)
    mean_x = float(marginal_x @ xs) / total
    mean_y = float(marginal_y @ ys) / total
    var_x = float(marginal_x @ (xs - mean_x) ** 2) / (total - 1.0)
    var_y = float(marginal_y @ (ys - mean_y) ** 2) / (total - 1.0)
    return CentroidEstimate(
        mean_x - grid.beam_center[0],
        mean_y - grid.beam_center[1],
        float(np.sqrt(var_x / total)),
        float(np.sqrt(var_y / total)),
        total,
    )


def calibrate_shifts(
    counts_h: CountMap,
    counts_v: CountMap,
    background: Optional[float] = None,
) -> ShiftCalibration:
    """Walk-off shifts from an |H> run and a |V> run without post-selection bias.

    The H run is displaced along x only and the V run along y only, so
    a_x = x(H) - x(V) and a_y = y(V) - y(H).

    Raises
    ------
    InsufficientCountsError
        If either map is too sparse.
    """
    h = centroid_estimate(counts_h, background)
    v = centroid_estimate(counts_v, background)
    return ShiftCalibration(
        h.x - v.x,
        v.y - h.y,
        float(np.hypot(h.stderr_x, v.stderr_x)),
        float(np.hypot(h.stderr_y, v.stderr_y)),
    )


def calibration_states() -> Tuple[PolarizationState, PolarizationState]:
    """Pre-selections of the two calibration runs (|H>, |V>); each is post-selected onto itself."""
    return make_linear_state(0.0), make_linear_state(np.pi / 2)
