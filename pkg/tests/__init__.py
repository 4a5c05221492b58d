from .common import THIN, THICK, THETA_I, ANOMALOUS_THETA_F
from .helper import single_centroid_by_quadrature, sequential_centroid_by_quadrature
