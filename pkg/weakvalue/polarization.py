import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np

from weakvalue.config import Config
from weakvalue.errors import DivergentWeakValueError, InvalidArgumentError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
REAL_TOLERANCE = 1e-12


class Axis(str, Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True)
class PolarizationState:
    """Normalized pure polarization state amp_h|H> + amp_v|V>."""

    amp_h: complex
    amp_v: complex

    def __post_init__(self) -> None:
        norm = abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOLERANCE:
            raise InvalidArgumentError(f'state is not normalized: |h|^2 + |v|^2 = {norm!r}')

    @classmethod
    def from_amplitudes(cls, amp_h: complex, amp_v: complex) -> 'PolarizationState':
        """Build a state from arbitrary (nonzero) amplitudes, normalizing them."""
        norm = math.sqrt(abs(amp_h) ** 2 + abs(amp_v) ** 2)
        if not math.isfinite(norm) or norm == 0.0:
            raise InvalidArgumentError('amplitudes must be finite and not both zero')
        return cls(complex(amp_h) / norm, complex(amp_v) / norm)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_h, self.amp_v], dtype=complex)

    @property
    def is_linear(self) -> bool:
        """True when both amplitudes are real (a linear polarization)."""
        return abs(complex(self.amp_h).imag) <= REAL_TOLERANCE and abs(complex(self.amp_v).imag) <= REAL_TOLERANCE


class Projector:
    """Rank-one projector onto |H> or |V>."""

    def __init__(self, axis: Union[Axis, str]) -> None:
        self.axis = Axis(axis)
        index = 0 if self.axis is Axis.H else 1
        self.matrix = np.zeros((2, 2), dtype=complex)
        self.matrix[index, index] = 1.0

    def apply(self, vector: Union[PolarizationState, np.ndarray]) -> np.ndarray:
        """Project a state (or raw amplitude vector); the result is not renormalized."""
        if isinstance(vector, PolarizationState):
            vector = vector.vector
        return self.matrix @ np.asarray(vector, dtype=complex)

    @property
    def complement(self) -> 'Projector':
        return PI_V if self.axis is Axis.H else PI_H

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Projector) and other.axis is self.axis

    def __hash__(self) -> int:
        return hash(self.axis)

    def __repr__(self) -> str:
        return f'Projector({self.axis.value})'


PI_H = Projector(Axis.H)
PI_V = Projector(Axis.V)


@dataclass(frozen=True)
class WeakValueResult:
    value: complex
    overlap_z: complex

    @property
    def is_real(self) -> bool:
        return abs(complex(self.value).imag) <= REAL_TOLERANCE

    @property
    def real(self) -> float:
        return complex(self.value).real


def make_linear_state(theta: float) -> PolarizationState:
    """cos(theta)|H> + sin(theta)|V>.

    Parameters
    ----------
    theta:
        Polarization angle in radians.

    Raises
    ------
    InvalidArgumentError
        If theta is not finite.
    """
    if not math.isfinite(theta):
        raise InvalidArgumentError(f'theta must be finite, got {theta!r}')
    return PolarizationState(complex(math.cos(theta)), complex(math.sin(theta)))


def inner_product(psi_f: PolarizationState, psi_i: PolarizationState) -> complex:
    """<psi_f|psi_i>; np.vdot conjugates its first argument."""
    return complex(np.vdot(psi_f.vector, psi_i.vector))


def weak_value(
    obs: Projector,
    psi_i: PolarizationState,
    psi_f: PolarizationState,
    tolerance: float = Config.Defaults.divergence_tolerance,
) -> WeakValueResult:
    """Weak value <psi_f|obs|psi_i> / <psi_f|psi_i> of a projector.

    Parameters
    ----------
    obs:
        Projector whose weak value is requested.
    psi_i, psi_f:
        Pre- and post-selected states.
    tolerance:
        Smallest |<psi_f|psi_i>| still treated as non-orthogonal.

    Returns
    -------
    result:
        The weak value together with the overlap z it was divided by.

    Raises
    ------
    DivergentWeakValueError
        If |z| <= tolerance. The error carries |z|.
    """
    overlap = inner_product(psi_f, psi_i)
    if abs(overlap) <= tolerance:
        raise DivergentWeakValueError(abs(overlap), tolerance)
    numerator = complex(np.vdot(psi_f.vector, obs.apply(psi_i)))
    return WeakValueResult(numerator / overlap, overlap)


def branch_amplitudes(psi_i: PolarizationState, psi_f: PolarizationState) -> Tuple[complex, complex]:
    """Split z = <psi_f|psi_i> into the |H> and |V> branch contributions."""
    z_h = complex(psi_f.amp_h).conjugate() * complex(psi_i.amp_h)
    z_v = complex(psi_f.amp_v).conjugate() * complex(psi_i.amp_v)
    return z_h, z_v


def solve_postselection_angle(target: float, theta_i: float) -> float:
    """Post-selection angle theta_f whose weak value of PI_H equals target.

    For linear states the weak value of PI_H is 1 / (1 + tan(theta_i) tan(theta_f)),
    so tan(theta_f) = (1 - target) / (target tan(theta_i)). The solution is
    returned on the principal branch (-pi/2, pi/2].

    Raises
    ------
    InvalidArgumentError
        If target or theta_i is not finite, or theta_i is an eigenstate angle
        (then every post-selection gives the same weak value).
    """
    if not (math.isfinite(target) and math.isfinite(theta_i)):
        raise InvalidArgumentError('target and theta_i must be finite')
    sin_i, cos_i = math.sin(theta_i), math.cos(theta_i)
    if abs(sin_i) < 1e-12 or abs(cos_i) < 1e-12:
        raise InvalidArgumentError(f'theta_i = {theta_i!r} is an eigenstate angle; no anomalous weak values')
    theta_f = math.atan2(1.0 - target, target * sin_i / cos_i)
    if theta_f > math.pi / 2:
        theta_f -= math.pi
    elif theta_f <= -math.pi / 2:
        theta_f += math.pi
    logger.debug('weak value %r at theta_i=%r -> theta_f=%r', target, theta_i, theta_f)
    return theta_f


def linear_weak_values(theta_i: float, theta_f: float) -> Tuple[float, float]:
    """(weak value of PI_H, weak value of PI_V) for linear pre/post states."""
    psi_i, psi_f = make_linear_state(theta_i), make_linear_state(theta_f)
    return weak_value(PI_H, psi_i, psi_f).real, weak_value(PI_V, psi_i, psi_f).real
