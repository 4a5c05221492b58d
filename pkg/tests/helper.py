from typing import Tuple

import numpy as np
from scipy.integrate import quad

from weakvalue.pointer import GaussianPointer


def _moment(f, power: int, limit: float) -> float:
    value, _ = quad(lambda q: q ** power * f(q), -limit, limit, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def single_centroid_by_quadrature(a_w: float, a: float, sigma: float) -> Tuple[float, float]:
    """(normalized centroid, unnormalized first moment) of (1 - A) phi(q) + A phi(q - a)."""
    phi = GaussianPointer(sigma)
    shifted = phi.shifted(a)

    def psi(q):
        return (1.0 - a_w) * phi.amplitude(q) + a_w * shifted.amplitude(q)

    limit = abs(a) + 14.0 * sigma
    norm = _moment(lambda q: psi(q) ** 2, 0, limit)
    first = _moment(lambda q: psi(q) ** 2, 1, limit)
    return first / norm, first


def sequential_centroid_by_quadrature(
    z_h: complex, z_v: complex, a_x: float, a_y: float, sigma: float
) -> Tuple[float, float, float]:
    """(x, y, norm) of z_H phi(x - a_x) phi(y) + z_V phi(x) phi(y - a_y), from one-dimensional integrals."""
    phi = GaussianPointer(sigma)
    fx = phi.shifted(a_x).amplitude
    fy = phi.shifted(a_y).amplitude
    f0 = phi.amplitude
    limit = max(a_x, a_y) + 14.0 * sigma

    # the state is a sum of products, so every 2-d moment factorizes
    n0 = _moment(lambda q: f0(q) ** 2, 0, limit)
    nx = _moment(lambda q: fx(q) ** 2, 0, limit)
    ny = _moment(lambda q: fy(q) ** 2, 0, limit)
    cx = _moment(lambda q: f0(q) * fx(q), 0, limit)
    cy = _moment(lambda q: f0(q) * fy(q), 0, limit)
    mx = _moment(lambda q: fx(q) ** 2, 1, limit)
    my = _moment(lambda q: fy(q) ** 2, 1, limit)
    mx0 = _moment(lambda q: f0(q) ** 2, 1, limit)
    my0 = mx0
    mcx = _moment(lambda q: f0(q) * fx(q), 1, limit)
    mcy = _moment(lambda q: f0(q) * fy(q), 1, limit)

    hh, vv = abs(z_h) ** 2, abs(z_v) ** 2
    cross = 2.0 * (z_h * np.conj(z_v)).real
    norm = hh * nx * n0 + vv * n0 * ny + cross * cx * cy
    x = (hh * mx * n0 + vv * mx0 * ny + cross * mcx * cy) / norm
    y = (hh * nx * my0 + vv * n0 * my + cross * cx * mcy) / norm
    return x, y, norm
