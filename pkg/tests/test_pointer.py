import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from weakvalue.errors import InvalidArgumentError
from weakvalue.pointer import (
    GaussianPointer,
    bin_integrals,
    normal_mass,
    overlap_defect,
    overlap_kappa,
    shifted_first_moment,
)


def test_pointer_intensity_is_a_density():
    pointer = GaussianPointer(4.3)
    total, _ = quad(pointer.intensity, -60, 60)
    assert total == pytest.approx(1.0, abs=1e-12)
    second, _ = quad(lambda q: q ** 2 * pointer.intensity(q), -60, 60)
    assert second == pytest.approx(4.3 ** 2, rel=1e-10)


def test_shifted_pointer():
    pointer = GaussianPointer(2.0).shifted(1.5)
    assert pointer.center == 1.5
    assert pointer.amplitude(1.5) == pytest.approx((2 * math.pi * 4.0) ** -0.25)


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.nan])
def test_pointer_rejects_bad_sigma(sigma):
    with pytest.raises(InvalidArgumentError):
        GaussianPointer(sigma)
    with pytest.raises(InvalidArgumentError):
        overlap_kappa(1.0, sigma)


@pytest.mark.parametrize("a", [0.0, 0.7, 1.9, 10.0])
def test_overlap_kappa_matches_quadrature(a):
    pointer = GaussianPointer(4.3)
    shifted = pointer.shifted(a)
    value, _ = quad(lambda q: pointer.amplitude(q) * shifted.amplitude(q), -80, 80)
    assert overlap_kappa(a, 4.3) == pytest.approx(value, abs=1e-12)
    assert overlap_kappa(a, 4.3) == pytest.approx(math.exp(-a ** 2 / (8 * 4.3 ** 2)), rel=1e-15)


def test_overlap_defect_keeps_precision_for_tiny_shifts():
    a = 1e-9
    assert overlap_defect(a, 4.3) > 0.0
    assert overlap_defect(a, 4.3) == pytest.approx(a ** 2 / (8 * 4.3 ** 2), rel=1e-9)
    assert overlap_defect(1.7, 4.3) == pytest.approx(1.0 - overlap_kappa(1.7, 4.3), rel=1e-12)


def test_overlap_is_vectorized():
    values = overlap_kappa(np.array([0.0, 0.7, 1.9]), 4.3)
    assert values.shape == (3,)
    assert values[0] == 1.0


@pytest.mark.parametrize("a", [0.7, 1.7, -1.9])
def test_shifted_first_moment_matches_quadrature(a):
    pointer = GaussianPointer(4.3)
    shifted = pointer.shifted(a)
    value, _ = quad(lambda q: pointer.amplitude(q) * q * shifted.amplitude(q), -80, 80)
    assert shifted_first_moment(a, 4.3) == pytest.approx(value, abs=1e-12)


def test_normal_mass_keeps_far_tails():
    expected = norm.sf(30.0) - norm.sf(31.0)
    assert normal_mass(30.0, 31.0, 0.0, 1.0) == pytest.approx(expected, rel=1e-9)
    assert normal_mass(-31.0, -30.0, 0.0, 1.0) == pytest.approx(expected, rel=1e-9)


def test_normal_mass_with_infinite_edges():
    assert normal_mass(-math.inf, math.inf, 0.3, 2.0) == pytest.approx(1.0, abs=1e-15)
    assert normal_mass(-math.inf, 0.3, 0.3, 2.0) == pytest.approx(0.5, abs=1e-15)


def test_bin_integrals_over_the_line():
    terms = bin_integrals(1.9, 4.3, -math.inf, math.inf)
    assert terms.i_zero == pytest.approx(1.0, abs=1e-15)
    assert terms.i_shift == pytest.approx(1.0, abs=1e-15)
    assert terms.i_cross == pytest.approx(overlap_kappa(1.9, 4.3), abs=1e-15)


def test_bin_integrals_match_quadrature():
    pointer = GaussianPointer(4.3)
    shifted = pointer.shifted(1.9)
    lo, hi = np.array([-3.0, 0.5, 6.0]), np.array([-2.0, 1.5, 9.0])
    terms = bin_integrals(1.9, 4.3, lo, hi)
    for k in range(3):
        zero, _ = quad(pointer.intensity, lo[k], hi[k])
        shift, _ = quad(shifted.intensity, lo[k], hi[k])
        cross, _ = quad(lambda q: pointer.amplitude(q) * shifted.amplitude(q), lo[k], hi[k])
        assert terms.i_zero[k] == pytest.approx(zero, rel=1e-10)
        assert terms.i_shift[k] == pytest.approx(shift, rel=1e-10)
        assert terms.i_cross[k] == pytest.approx(cross, rel=1e-10)


def test_bin_integrals_partition_sums_to_one():
    edges = np.linspace(-40.0, 40.0, 81)
    terms = bin_integrals(0.7, 4.3, edges[:-1], edges[1:])
    assert np.sum(terms.i_zero) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(terms.i_cross) == pytest.approx(overlap_kappa(0.7, 4.3), abs=1e-12)


def test_bin_integrals_reject_empty_bins():
    with pytest.raises(InvalidArgumentError):
        bin_integrals(0.7, 4.3, [0.0, 2.0], [1.0, 2.0])
