"""Physical constants in SI units."""

import math

EPS0 = 8.8541878128e-12      # vacuum permittivity [F/m]
MU0 = 4.0e-7 * math.pi       # vacuum permeability [H/m]
C0 = 1.0 / math.sqrt(EPS0 * MU0)   # vacuum light speed [m/s], ~2.99792458e8
ETA0 = math.sqrt(MU0 / EPS0)       # vacuum wave impedance [ohm]
