"""Physical constants (CODATA, SI) and the unit conversions used by configs."""

from scipy import constants as _c

HBAR = _c.hbar
K_B = _c.k
AMU = 1.66054e-27
MEV = 1e-3 * _c.e
ANGSTROM = 1e-10
NANOSECOND = 1e-9
EULER_GAMMA = 0.5772156649
