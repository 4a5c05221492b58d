import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from weakvalue.config import Config
from weakvalue.errors import (
    InvalidArgumentError,
    UnsupportedImaginaryError,
    VanishingPostselectionError,
)
from weakvalue.pointer import Real, overlap_defect, overlap_kappa, shifted_first_moment
from weakvalue.polarization import (
    PI_H,
    PI_V,
    REAL_TOLERANCE,
    PolarizationState,
    branch_amplitudes,
    weak_value,
)

logger = logging.getLogger(__name__)


class MeterOrder(str, Enum):
    EXACT = "exact"
    ORDER1 = "order1"
    ORDER3 = "order3"

    @classmethod
    def from_value(cls, order: Union['MeterOrder', int, str]) -> 'MeterOrder':
        if isinstance(order, cls):
            return order
        aliases = {1: cls.ORDER1, 3: cls.ORDER3, '1': cls.ORDER1, '3': cls.ORDER3}
        if order in aliases:
            return aliases[order]
        try:
            return cls(order)
        except ValueError:
            raise InvalidArgumentError(f'unknown meter order {order!r}') from None


@dataclass(frozen=True)
class CouplingConfig:
    """Walk-off shifts of the two crystals and the pointer width, all in pixels."""

    a_x: float
    a_y: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ('a_x', 'a_y', 'sigma'):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidArgumentError(f'{name} must be finite, got {value!r}')
        if self.sigma <= 0:
            raise InvalidArgumentError(f'sigma must be positive, got {self.sigma!r}')
        if self.a_x < 0 or self.a_y < 0:
            raise InvalidArgumentError(f'shifts must be >= 0, got a_x={self.a_x!r}, a_y={self.a_y!r}')

    @classmethod
    def from_preset(cls, name: str) -> 'CouplingConfig':
        return cls(*Config.preset(name))

    @property
    def g_x(self) -> float:
        return self.a_x / self.sigma

    @property
    def g_y(self) -> float:
        return self.a_y / self.sigma

    @property
    def weak_regime_advisory(self) -> bool:
        """Set when either coupling approaches the border of the weak regime."""
        return max(self.g_x, self.g_y) >= Config.Defaults.weak_regime_g


@dataclass(frozen=True)
class MeterPrediction:
    x_centroid: float
    y_centroid: float
    postselection_probability: float
    order: MeterOrder = MeterOrder.EXACT


def _real_weak_value(a_w: ArrayLike) -> np.ndarray:
    values = np.asarray(a_w)
    if np.iscomplexobj(values):
        if np.any(np.abs(values.imag) > REAL_TOLERANCE):
            raise UnsupportedImaginaryError(
                'the meter model covers real weak values only; the imaginary part '
                'couples to <QP + PQ>, which vanishes for the real Gaussian pointer'
            )
        values = values.real
    values = values.astype(float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError('weak value must be finite')
    return values


def _out(value: np.ndarray) -> Real:
    return float(value) if np.ndim(value) == 0 else value


def exact_meter_single(a_w: ArrayLike, a: ArrayLike, sigma: float, normalized: bool = True) -> Real:
    """Exact meter centroid for a single projector coupling.

    exp(-i a PI (x) P) equals I + PI (exp(-i a P) - I), so the post-selected
    pointer is z [(1 - A) phi(q) + A phi(q - a)] with no series truncation.

    Parameters
    ----------
    a_w:
        Real weak value of the coupled projector (scalar or array).
    a:
        Walk-off shift in pixels (scalar or array, may be negative).
    sigma:
        Pointer width parameter in pixels.
    normalized:
        True (default) divides by the post-selected norm, which is what a
        photon-counting centroid measures. False returns <Psi_f|Q|Psi_f> per
        unit |z|^2.

    Returns
    -------
    centroid:
        a [A + A(A - 1) w] / [1 + 2 A (A - 1) w] with w = 1 - kappa, or the
        numerator alone when not normalized. The denominator is >= 1/2.

    Raises
    ------
    UnsupportedImaginaryError
        If a_w carries an imaginary part.
    """
    weak = _real_weak_value(a_w)
    a = np.asarray(a, dtype=float)
    if not normalized:
        moment = shifted_first_moment(a, sigma)
        return _out(2.0 * weak * moment + weak ** 2 * (a - 2.0 * moment))
    defect = overlap_defect(a, sigma)
    mixing = weak * (weak - 1.0) * defect
    return _out(a * (weak + mixing) / (1.0 + 2.0 * mixing))


def perturbative_meter(
    a_w: ArrayLike,
    a: ArrayLike,
    sigma: float,
    order: Union[MeterOrder, int] = 1,
    spectator: float = 0.0,
) -> Real:
    """Weak-coupling series of the normalized meter centroid.

    Order 1 is a A. Order 3 adds (a^3 / 8 sigma^2) A (1 - A)(2A - 1); the
    second order vanishes because the response is odd in a. A spectator shift
    (the other crystal of a sequential pair) enters only through the decoherence
    factor, turning a^3 into a (a^2 + spectator^2).

    Raises
    ------
    InvalidArgumentError
        If order is not 1 or 3, or sigma <= 0.
    """
    order = MeterOrder.from_value(order)
    if order is MeterOrder.EXACT:
        raise InvalidArgumentError('perturbative orders are 1 and 3')
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidArgumentError(f'sigma must be positive, got {sigma!r}')
    weak = _real_weak_value(a_w)
    a = np.asarray(a, dtype=float)
    first = a * weak
    if order is MeterOrder.ORDER1:
        return _out(first)
    coefficient = a * (a ** 2 + spectator ** 2) / (8.0 * sigma ** 2)
    return _out(first + coefficient * weak * (1.0 - weak) * (2.0 * weak - 1.0))


def sequential_meter(
    psi_i: PolarizationState,
    psi_f: PolarizationState,
    config: CouplingConfig,
    order: Union[MeterOrder, int, str] = MeterOrder.EXACT,
) -> MeterPrediction:
    """Meter centroids of the two-crystal chain U_H U_V followed by post-selection.

    The post-selected pointer is z_H phi(x - a_x) phi(y) + z_V phi(x) phi(y - a_y),
    so both overlap factors enter the cross term of each axis.

    Parameters
    ----------
    psi_i, psi_f:
        Pre- and post-selected polarization states.
    config:
        Shifts and pointer width.
    order:
        EXACT (default) for the closed form; 1 or 3 for the weak-coupling series
        of each axis evaluated at the weak values of PI_H and PI_V.

    Returns
    -------
    prediction:
        Centroids in pixels and the exact post-selection probability.

    Raises
    ------
    VanishingPostselectionError
        If the post-selection probability is not above 1e-12.
    DivergentWeakValueError
        For perturbative orders with orthogonal pre/post selection.
    """
    order = MeterOrder.from_value(order)
    z_h, z_v = branch_amplitudes(psi_i, psi_f)
    kappa_xy = overlap_kappa(config.a_x, config.sigma) * overlap_kappa(config.a_y, config.sigma)
    defect_xy = overlap_defect(np.hypot(config.a_x, config.a_y), config.sigma)
    cross = (z_h * z_v.conjugate()).real
    probability = abs(z_h + z_v) ** 2 - 2.0 * cross * defect_xy
    if probability <= Config.Defaults.postselection_floor:
        raise VanishingPostselectionError(probability)

    if order is MeterOrder.EXACT:
        x = config.a_x * (abs(z_h) ** 2 + cross * kappa_xy) / probability
        y = config.a_y * (abs(z_v) ** 2 + cross * kappa_xy) / probability
        return MeterPrediction(x, y, probability, order)

    aw_h = weak_value(PI_H, psi_i, psi_f)
    aw_v = weak_value(PI_V, psi_i, psi_f)
    if not (aw_h.is_real and aw_v.is_real):
        raise UnsupportedImaginaryError('perturbative meter orders need real weak values')
    x = perturbative_meter(aw_h.real, config.a_x, config.sigma, order, spectator=config.a_y)
    y = perturbative_meter(aw_v.real, config.a_y, config.sigma, order, spectator=config.a_x)
    return MeterPrediction(x, y, probability, order)


def saturation_limit(a: float) -> float:
    """Limit a/2 of the exact centroid as the weak value goes to +-infinity.

    The exact response is not monotonic in the weak value: past the point where
    it crosses a A it peaks and then decays back towards a/2.
    """
    return 0.5 * a
