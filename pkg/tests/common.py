import math

# (a_x, a_y, sigma) in pixels
THIN = (0.7, 0.7, 4.3)
THICK = (1.9, 1.7, 4.3)

THETA_I = math.pi / 4
# weak values 2.5 (PI_H) and -1.5 (PI_V) at THETA_I
ANOMALOUS_THETA_F = math.atan(-0.6)
ORTHOGONAL_THETA_F = -math.pi / 4

EXPERIMENT_FILE = """\
# thin crystals, diagonal preparation
preset = thin
theta_i = 0.7853981634
"""
