import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect, brentq

from weakvalue.config import Config
from weakvalue.detector import (
    DetectionConfig,
    PixelGrid,
    centroid_estimate,
    derive_seed,
    pixel_probability_map,
    simulate_counts,
)
from weakvalue.errors import (
    DegenerateRegionError,
    InsufficientCountsError,
    InvalidArgumentError,
    InversionError,
    VanishingPostselectionError,
)
from weakvalue.meter import (
    CouplingConfig,
    MeterOrder,
    exact_meter_single,
    perturbative_meter,
    sequential_meter,
)
from weakvalue.polarization import (
    PI_H,
    PI_V,
    inner_product,
    make_linear_state,
    solve_postselection_angle,
    weak_value,
)

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

SCAN_STEP = 0.01
BOUNDARY_XTOL = 1e-4


@dataclass(frozen=True)
class SweepRow:
    theta_i: float
    theta_f: float
    aw_h_true: Optional[float] = None
    aw_v_true: Optional[float] = None
    x_exact: Optional[float] = None
    x_order1: Optional[float] = None
    x_order3: Optional[float] = None
    y_exact: Optional[float] = None
    y_order1: Optional[float] = None
    y_order3: Optional[float] = None
    x_measured: Optional[float] = None
    x_stderr: Optional[float] = None
    y_measured: Optional[float] = None
    y_stderr: Optional[float] = None
    p_postselect: Optional[float] = None
    divergent: bool = False


@dataclass(frozen=True)
class ValidityReport:
    """Weak-value intervals where each perturbative order stays within epsilon.

    region1: order 1 valid. region2: (lower, upper) intervals where only
    order 3 is valid. region3: (lower, upper) remainder of the search interval
    where both fail. Empty intervals have equal endpoints.
    """

    a: float
    sigma: float
    epsilon: float
    search: Interval
    region1: Interval
    region2: Tuple[Interval, Interval]
    region3: Tuple[Interval, Interval]

    @property
    def g(self) -> float:
        return self.a / self.sigma

    @property
    def region2_hull(self) -> Interval:
        return self.region2[0][0], self.region2[1][1]

    def classify(self, a_w: float) -> int:
        """Region number (1, 2 or 3) a weak value falls into."""
        if self.region1[0] <= a_w <= self.region1[1]:
            return 1
        low, high = self.region2_hull
        if low <= a_w <= high:
            return 2
        return 3


class BiasRow(NamedTuple):
    a_true: float
    exact: float
    order1: float
    order3: float
    bias1: float
    bias3: float


def extract_weak_value(
    centroid: float,
    a: float,
    sigma: float,
    order: Union[MeterOrder, int] = 1,
) -> float:
    """Invert the perturbative meter relation for the weak value.

    Parameters
    ----------
    centroid:
        Measured (or predicted) meter centroid in pixels.
    a:
        Walk-off shift in pixels.
    sigma:
        Pointer width parameter in pixels.
    order:
        1 returns centroid / a. 3 solves
        a A + (a^3 / 8 sigma^2) A (1 - A)(2A - 1) = centroid.

    Returns
    -------
    weak_value:
        For order 3, the root on the rising branch of the cubic, the branch that
        contains [0, 1] and lies nearest to the order-1 estimate.

    Raises
    ------
    InvalidArgumentError
        If a <= 0 or sigma <= 0.
    InversionError
        If the centroid lies beyond the cubic's local extremum or outside the
        search bracket [-50, 50], i.e. the response is saturated.
    """
    order = MeterOrder.from_value(order)
    if order is MeterOrder.EXACT:
        raise InvalidArgumentError('extraction inverts order 1 or order 3')
    if not a > 0:
        raise InvalidArgumentError(f'shift a must be positive, got {a!r}')
    if not sigma > 0:
        raise InvalidArgumentError(f'sigma must be positive, got {sigma!r}')
    if order is MeterOrder.ORDER1:
        return centroid / a

    cubic = a ** 3 / (8.0 * sigma ** 2)
    bracket_lo, bracket_hi = Config.Defaults.inversion_bracket
    # c'(A) = -6k A^2 + 6k A + (a - k) is positive between its two roots,
    # which straddle [0, 1] since a > 0
    half_width = math.sqrt(0.25 + (a - cubic) / (6.0 * cubic))
    lo = max(0.5 - half_width, bracket_lo)
    hi = min(0.5 + half_width, bracket_hi)

    def residual(weak: float) -> float:
        return float(perturbative_meter(weak, a, sigma, 3)) - centroid

    if residual(lo) > 0 or residual(hi) < 0:
        raise InversionError(
            centroid,
            f'centroid outside the invertible range [{residual(lo) + centroid:.6g}, '
            f'{residual(hi) + centroid:.6g}] of the order-3 response',
        )
    root = brentq(residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(residual(root)) >= 1e-10 * a:
        raise InversionError(centroid, f'root finder stalled with residual {residual(root):.3e}')
    logger.debug('order-3 inversion of %r (a=%r): %r', centroid, a, root)
    return root


def _deviation(a: float, sigma: float, order: int) -> Callable[[np.ndarray], np.ndarray]:
    def measure(weak: np.ndarray) -> np.ndarray:
        weak = np.asarray(weak, dtype=float)
        exact = exact_meter_single(weak, a, sigma)
        approx = perturbative_meter(weak, a, sigma, order)
        return np.abs(exact - approx) / (a * np.maximum(1.0, np.abs(weak)))
    return measure


def deviation(a_w: Union[float, np.ndarray], a: float, sigma: float, order: int = 1) -> Union[float, np.ndarray]:
    """|exact - order_k| / (a max(1, |A|)), the relative validity criterion."""
    value = _deviation(a, sigma, order)(a_w)
    return float(value) if np.ndim(value) == 0 else value


def _boundary(dev: Callable[[np.ndarray], np.ndarray], epsilon: float, start: float, stop: float) -> float:
    steps = max(2, int(math.ceil(abs(stop - start) / SCAN_STEP)) + 1)
    grid = np.linspace(start, stop, steps)
    exceeded = np.nonzero(dev(grid) > epsilon)[0]
    if exceeded.size == 0:
        return stop
    index = int(exceeded[0])
    if index == 0:
        return start
    return bisect(lambda w: float(dev(w)) - epsilon, grid[index - 1], grid[index], xtol=BOUNDARY_XTOL)


def validity_region(
    a: float,
    sigma: float,
    epsilon: float = Config.Defaults.epsilon,
    search: Interval = Config.Defaults.search,
) -> ValidityReport:
    """Weak-value intervals where orders 1 and 3 track the exact meter response.

    Region 1 is the maximal interval containing [0, 1] where the order-1
    deviation stays within epsilon; region 2 extends it to where the order-3
    deviation does; region 3 is the rest of the search interval. Boundaries are
    located by bisection.

    Raises
    ------
    InvalidArgumentError
        For a <= 0, epsilon <= 0 or a search interval not containing [0, 1].
    DegenerateRegionError
        If order 1 already fails somewhere on [0, 1].
    """
    if not a > 0:
        raise InvalidArgumentError(f'shift a must be positive, got {a!r}')
    if not epsilon > 0:
        raise InvalidArgumentError(f'epsilon must be positive, got {epsilon!r}')
    search_lo, search_hi = float(search[0]), float(search[1])
    if not (math.isfinite(search_lo) and math.isfinite(search_hi) and search_lo <= 0.0 and search_hi >= 1.0):
        raise InvalidArgumentError(f'search interval {search!r} must be finite and contain [0, 1]')

    dev1 = _deviation(a, sigma, 1)
    dev3 = _deviation(a, sigma, 3)
    if np.any(dev1(np.linspace(0.0, 1.0, 201)) > epsilon):
        raise DegenerateRegionError(f'epsilon={epsilon!r} excludes part of [0, 1] at a={a!r}')

    low1 = _boundary(dev1, epsilon, 0.0, search_lo)
    high1 = _boundary(dev1, epsilon, 1.0, search_hi)
    low2 = min(low1, _boundary(dev3, epsilon, 0.0, search_lo))
    high2 = max(high1, _boundary(dev3, epsilon, 1.0, search_hi))
    report = ValidityReport(
        a=a,
        sigma=sigma,
        epsilon=epsilon,
        search=(search_lo, search_hi),
        region1=(low1, high1),
        region2=((low2, low1), (high1, high2)),
        region3=((search_lo, low2), (high2, search_hi)),
    )
    logger.debug('validity a=%r eps=%r: region1=%r region2 hull=%r', a, epsilon, report.region1, report.region2_hull)
    return report


def bias_curve(a: float, sigma: float, a_w_grid: Sequence[float]) -> List[BiasRow]:
    """Finite-coupling bias of orders 1 and 3 when reading the exact response.

    Order-3 entries are NaN where the exact centroid cannot be inverted.

    Raises
    ------
    InvalidArgumentError
        If the grid is empty.
    """
    if len(a_w_grid) == 0:
        raise InvalidArgumentError('weak-value grid is empty')
    rows = []
    for true_value in a_w_grid:
        true_value = float(true_value)
        exact = float(exact_meter_single(true_value, a, sigma))
        order1 = float(perturbative_meter(true_value, a, sigma, 1))
        order3 = float(perturbative_meter(true_value, a, sigma, 3))
        bias1 = extract_weak_value(exact, a, sigma, 1) - true_value
        try:
            bias3 = extract_weak_value(exact, a, sigma, 3) - true_value
        except InversionError as err:
            logger.debug('no order-3 estimate at A=%r: %s', true_value, err)
            bias3 = math.nan
        rows.append(BiasRow(true_value, exact, order1, order3, bias1, bias3))
    return rows


def weak_value_grid(low: float, high: float, count: int) -> List[float]:
    if count < 1:
        raise InvalidArgumentError(f'grid needs at least one point, got {count}')
    return [float(v) for v in np.linspace(low, high, count)]


def postselection_angles(theta_i: float, targets: Sequence[float]) -> List[float]:
    """Post-selection angles that realise the requested weak values of PI_H."""
    return [solve_postselection_angle(float(t), theta_i) for t in targets]


def sweep_row(
    index: int,
    theta_i: float,
    theta_f: float,
    config: CouplingConfig,
    mc: Optional[DetectionConfig] = None,
    grid: Optional[PixelGrid] = None,
) -> SweepRow:
    """One post-selection setting of a sweep; Monte Carlo uses the seed derived for `index`."""
    psi_i, psi_f = make_linear_state(theta_i), make_linear_state(theta_f)
    if abs(inner_product(psi_f, psi_i)) <= Config.Defaults.sweep_divergence:
        logger.warning('row %d: theta_f=%r is orthogonal to theta_i=%r, no centroids', index, theta_f, theta_i)
        return SweepRow(theta_i, theta_f, divergent=True)

    try:
        exact = sequential_meter(psi_i, psi_f, config)
    except VanishingPostselectionError as err:
        logger.warning('row %d: %s', index, err)
        return SweepRow(theta_i, theta_f, divergent=True)
    first = sequential_meter(psi_i, psi_f, config, MeterOrder.ORDER1)
    third = sequential_meter(psi_i, psi_f, config, MeterOrder.ORDER3)
    row = SweepRow(
        theta_i=theta_i,
        theta_f=theta_f,
        aw_h_true=weak_value(PI_H, psi_i, psi_f).real,
        aw_v_true=weak_value(PI_V, psi_i, psi_f).real,
        x_exact=exact.x_centroid,
        x_order1=first.x_centroid,
        x_order3=third.x_centroid,
        y_exact=exact.y_centroid,
        y_order1=first.y_centroid,
        y_order3=third.y_centroid,
        p_postselect=exact.postselection_probability,
    )
    if mc is None:
        return row

    detection = replace(mc, seed=derive_seed(mc.seed, index))
    counts = simulate_counts(pixel_probability_map(psi_i, psi_f, config, grid), detection)
    try:
        estimate = centroid_estimate(counts, background=detection.dark_mean_per_pixel or None)
    except InsufficientCountsError as err:
        logger.warning('row %d: %s', index, err)
        return row
    return replace(
        row,
        x_measured=estimate.x,
        x_stderr=estimate.stderr_x,
        y_measured=estimate.y,
        y_stderr=estimate.stderr_y,
    )


def sweep_postselection(
    theta_i: float,
    theta_f_list: Sequence[float],
    config: CouplingConfig,
    mc: Optional[DetectionConfig] = None,
    grid: Optional[PixelGrid] = None,
) -> List[SweepRow]:
    """Meter predictions (and optional Monte Carlo readout) for each post-selection, in input order."""
    return [sweep_row(index, theta_i, theta_f, config, mc, grid) for index, theta_f in enumerate(theta_f_list)]
