"""Physical constants (SI) and cesium-133 reference values."""

BOLTZMANN_K = 1.380649e-23      # J/K
SPEED_OF_LIGHT = 2.99792458e8   # m/s
PLANCK_H = 6.62607015e-34       # J*s

# Cesium-133 ground-state properties
CS133_MASS_KG = 2.2069468e-25           # 132.905 u
CS133_HYPERFINE_HZ = 9.192631770e9      # clock transition, exact
CS_D2_WAVELENGTH_M = 852.3e-9           # signal line
CS_D1_WAVELENGTH_M = 894.6e-9           # assisted line
