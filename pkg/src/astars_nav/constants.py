"""Physical constants and the default desk-scale scene."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s

GPS_ORBIT_RADIUS = 26_560e3  # m, geocentric
EARTH_SURFACE_MIN = 6.5e6  # m, lower bound used to sanity-check satellite states

L1_FREQ = 1575.42e6
L2_FREQ = 1227.60e6
L5_FREQ = 1176.45e6

L1_WAVELENGTH = SPEED_OF_LIGHT / L1_FREQ
L2_WAVELENGTH = SPEED_OF_LIGHT / L2_FREQ
L5_WAVELENGTH = SPEED_OF_LIGHT / L5_FREQ

# default scene coordinates (abstract Cartesian metres)
ASTARS_POSITION = (-2604348.533, 4743312.217, 3364998.513)
URBAN_RECEIVER = (-2604298.533, 4743297.217, 3364978.513)
INDOOR_RECEIVER = (-2604398.533, 4743350.217, 3365030.513)
ASTARS_HEIGHT = 40.0  # m above ground
