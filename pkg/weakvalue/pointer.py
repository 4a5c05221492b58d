import logging
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import erfc

from weakvalue.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Real = Union[float, np.ndarray]

_SQRT2 = np.sqrt(2.0)


def _out(value: np.ndarray) -> Real:
    return float(value) if np.ndim(value) == 0 else value


def _check_sigma(sigma: float) -> None:
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidArgumentError(f'sigma must be a positive number of pixels, got {sigma!r}')


@dataclass(frozen=True)
class GaussianPointer:
    """
    Gaussian transverse pointer, lengths in detector pixels

    The amplitude is f(q) = (2 pi sigma^2)^(-1/4) exp(-(q - center)^2 / 4 sigma^2),
    so |f|^2 is a normal density with standard deviation sigma.
    """

    sigma: float
    center: float = 0.0

    def __post_init__(self) -> None:
        _check_sigma(self.sigma)

    def amplitude(self, q: ArrayLike) -> Real:
        q = np.asarray(q, dtype=float)
        norm = (2.0 * np.pi * self.sigma ** 2) ** -0.25
        return norm * np.exp(-((q - self.center) ** 2) / (4.0 * self.sigma ** 2))

    def intensity(self, q: ArrayLike) -> Real:
        return self.amplitude(q) ** 2

    def shifted(self, shift_a: float) -> 'GaussianPointer':
        return GaussianPointer(self.sigma, self.center + shift_a)


class BinIntegrals(NamedTuple):
    i_zero: Real
    i_shift: Real
    i_cross: Real


def overlap_kappa(shift_a: ArrayLike, sigma: float) -> Real:
    """<phi(q)|phi(q - a)> = exp(-a^2 / 8 sigma^2).

    Raises
    ------
    InvalidArgumentError
        If sigma <= 0.
    """
    _check_sigma(sigma)
    shift_a = np.asarray(shift_a, dtype=float)
    return _out(np.exp(-shift_a ** 2 / (8.0 * sigma ** 2)))


def overlap_defect(shift_a: ArrayLike, sigma: float) -> Real:
    """1 - kappa, evaluated without cancellation for small shifts."""
    _check_sigma(sigma)
    shift_a = np.asarray(shift_a, dtype=float)
    return _out(-np.expm1(-shift_a ** 2 / (8.0 * sigma ** 2)))


def shifted_first_moment(shift_a: ArrayLike, sigma: float) -> Real:
    """<phi|Q exp(-i a P)|phi> = integral of f(q) q f(q - a), which is (a/2) kappa."""
    shift_a = np.asarray(shift_a, dtype=float)
    return _out(0.5 * shift_a * overlap_kappa(shift_a, sigma))


def normal_mass(lo: ArrayLike, hi: ArrayLike, mean: ArrayLike, sd: float) -> Real:
    """P(lo <= X < hi) for X ~ N(mean, sd^2).

    Each bin is evaluated on the tail it lies in, so masses far from the mean
    keep full relative precision instead of cancelling to zero.
    """
    lo = (np.asarray(lo, dtype=float) - mean) / (sd * _SQRT2)
    hi = (np.asarray(hi, dtype=float) - mean) / (sd * _SQRT2)
    upper = 0.5 * (erfc(lo) - erfc(hi))
    lower = 0.5 * (erfc(-hi) - erfc(-lo))
    with np.errstate(invalid="ignore"):
        upper_tail = lo + hi >= 0.0
    return _out(np.where(upper_tail, upper, lower))


def bin_integrals(
    shift_a: float,
    sigma: float,
    bin_lo: ArrayLike,
    bin_hi: ArrayLike,
    center: float = 0.0,
) -> BinIntegrals:
    """Integrals of the three separable pointer-intensity terms over bins.

    Parameters
    ----------
    shift_a:
        Walk-off shift a of the displaced branch.
    sigma:
        Pointer width parameter.
    bin_lo, bin_hi:
        Bin edges (scalars or equally shaped arrays); infinite edges allowed.
    center:
        Undisplaced pointer center.

    Returns
    -------
    integrals:
        i_zero = int |f(q)|^2, i_shift = int |f(q - a)|^2 and
        i_cross = int f(q) f(q - a) = kappa * (normal mass centred at a/2).

    Raises
    ------
    InvalidArgumentError
        If sigma <= 0 or any bin has bin_lo >= bin_hi.
    """
    _check_sigma(sigma)
    bin_lo = np.asarray(bin_lo, dtype=float)
    bin_hi = np.asarray(bin_hi, dtype=float)
    if np.any(~(bin_lo < bin_hi)):
        raise InvalidArgumentError('every bin needs bin_lo < bin_hi')
    i_zero = normal_mass(bin_lo, bin_hi, center, sigma)
    i_shift = normal_mass(bin_lo, bin_hi, center + shift_a, sigma)
    i_cross = overlap_kappa(shift_a, sigma) * normal_mass(bin_lo, bin_hi, center + 0.5 * shift_a, sigma)
    return BinIntegrals(i_zero, i_shift, i_cross)
