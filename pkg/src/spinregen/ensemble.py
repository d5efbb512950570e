"""Thermal atomic ensemble: sampling, ballistic motion, boundary exchange.

The tracked ensemble is a computational sample of the vapor inside a
cylinder around the beam axis.  Atoms are stored as parallel numpy arrays
(positions, velocities, level populations, complex spin-wave amplitude);
``Atom`` is the single-atom view used by contracts and tests.

Two radii appear: ``cell_radius_m`` is the physical cell bore and
``sim_radius_m`` is the tracked sub-cylinder.  Atoms crossing the tracked
boundary (or the cell end caps) are exchanged against reservoir atoms with
a fresh thermal velocity drawn from the equilibrium wall flux, zero
spin-wave amplitude, and the reservoir's ground-level population.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .constants import (
    BOLTZMANN_K,
    CS133_HYPERFINE_HZ,
    CS133_MASS_KG,
    CS_D1_WAVELENGTH_M,
    CS_D2_WAVELENGTH_M,
)
from .rng import hashed_uniform


class GeometryError(ValueError):
    """Raised for degenerate or inconsistent beam/cell geometry."""


@dataclass(frozen=True)
class SpeciesConstants:
    """Atomic constants of the vapor species."""

    atomic_mass_kg: float
    hyperfine_splitting_hz: float   # ground-state splitting / 2pi
    signal_wavelength_m: float
    assist_wavelength_m: float

    def __post_init__(self):
        for name in ("atomic_mass_kg", "hyperfine_splitting_hz",
                     "signal_wavelength_m", "assist_wavelength_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.assist_wavelength_m == self.signal_wavelength_m:
            raise ValueError("assist and signal wavelengths must differ")

    @classmethod
    def cesium_133(cls) -> "SpeciesConstants":
        return cls(CS133_MASS_KG, CS133_HYPERFINE_HZ,
                   CS_D2_WAVELENGTH_M, CS_D1_WAVELENGTH_M)


@dataclass(frozen=True)
class EnsembleConfig:
    """Sample size and cell geometry for one ensemble realization."""

    n_atoms: int
    temperature_k: float
    cell_length_m: float
    cell_radius_m: float
    species: SpeciesConstants
    rng_seed: int
    sim_radius_m: float | None = None   # tracked sub-cylinder, defaults to min(1 mm, bore)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.temperature_k <= 0:
            raise ValueError("temperature_k must be positive")
        if self.cell_length_m <= 0 or self.cell_radius_m <= 0:
            raise ValueError("cell dimensions must be positive")
        if self.sim_radius_m is not None and not 0 < self.sim_radius_m <= self.cell_radius_m:
            raise ValueError("sim_radius_m must be in (0, cell_radius_m]")

    @property
    def tracked_radius_m(self) -> float:
        if self.sim_radius_m is not None:
            return self.sim_radius_m
        return min(1.0e-3, self.cell_radius_m)


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian beam axis, waist and placement.

    ``axis`` must be unit length; ``tilt_rad`` is the angle to the signal
    (+z) axis and is derived, kept for reporting.
    """

    axis: tuple[float, float, float]
    waist_m: float
    offset_m: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.waist_m <= 0:
            raise ValueError("waist_m must be positive")
        norm = float(np.linalg.norm(self.axis))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("beam axis must be unit length")

    @property
    def tilt_rad(self) -> float:
        return float(np.arccos(np.clip(self.axis[2], -1.0, 1.0)))

    @classmethod
    def along_z(cls, waist_m: float, offset_m=(0.0, 0.0, 0.0),
                tilt_rad: float = 0.0, tilt_plane: str = "x") -> "BeamGeometry":
        """Beam tilted by ``tilt_rad`` from +z in the x-z or y-z plane."""
        s, c = np.sin(tilt_rad), np.cos(tilt_rad)
        axis = (s, 0.0, c) if tilt_plane == "x" else (0.0, s, c)
        axis = tuple(np.asarray(axis) / np.linalg.norm(axis))
        return cls(axis=axis, waist_m=waist_m, offset_m=tuple(offset_m))


@dataclass(frozen=True)
class Atom:
    """Single-atom view: kinematics plus internal state.

    pop1/pop2 are the two ground hyperfine-level populations (excited
    states adiabatically eliminated); ``amp`` the complex spin-wave
    amplitude carried by this atom.
    """

    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    pop1: float
    pop2: float
    amp: complex

    def __post_init__(self):
        if abs(self.pop1 + self.pop2 - 1.0) > 1e-12:
            raise ValueError("pop1 + pop2 must equal 1")
        if abs(self.amp) ** 2 > self.pop1 * self.pop2 + 1e-9:
            raise ValueError("|amp|^2 exceeds pop1*pop2 coherence bound")


@dataclass
class Ensemble:
    """Array-of-struct ensemble state; one row per tracked atom."""

    positions: np.ndarray      # (N, 3) m
    velocities: np.ndarray     # (N, 3) m/s
    pop1: np.ndarray           # (N,)
    amp: np.ndarray            # (N,) complex
    wall_events: np.ndarray    # (N,) int64, per-atom exchange counter
    seed: int

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def pop2(self) -> np.ndarray:
        return 1.0 - self.pop1

    def atom(self, i: int) -> Atom:
        return Atom(position=tuple(self.positions[i]),
                    velocity=tuple(self.velocities[i]),
                    pop1=float(self.pop1[i]), pop2=float(1.0 - self.pop1[i]),
                    amp=complex(self.amp[i]))

    def copy(self) -> "Ensemble":
        return Ensemble(self.positions.copy(), self.velocities.copy(),
                        self.pop1.copy(), self.amp.copy(),
                        self.wall_events.copy(), self.seed)


def mean_thermal_speed(species: SpeciesConstants, temperature_k: float) -> float:
    """Mean speed sqrt(8 k T / (pi m)) of the Maxwell distribution."""
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    return float(np.sqrt(8.0 * BOLTZMANN_K * temperature_k
                         / (np.pi * species.atomic_mass_kg)))


def velocity_sigma(species: SpeciesConstants, temperature_k: float) -> float:
    """One-dimensional rms velocity sqrt(k T / m)."""
    return float(np.sqrt(BOLTZMANN_K * temperature_k / species.atomic_mass_kg))


def sample_ensemble(cfg: EnsembleConfig) -> Ensemble:
    """Draw the initial ensemble: uniform positions in the tracked cylinder,
    Maxwell velocities, every atom on level 1 with zero amplitude."""
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.n_atoms
    r_max = cfg.tracked_radius_m
    rho = r_max * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    z = (rng.random(n) - 0.5) * cfg.cell_length_m
    positions = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    sigma = velocity_sigma(cfg.species, cfg.temperature_k)
    velocities = rng.normal(0.0, sigma, size=(n, 3))
    return Ensemble(positions=positions, velocities=velocities,
                    pop1=np.ones(n), amp=np.zeros(n, dtype=np.complex128),
                    wall_events=np.zeros(n, dtype=np.int64), seed=cfg.rng_seed)


def beam_weight(position, beam: BeamGeometry):
    """Gaussian transverse intensity weight exp(-2 r^2 / w^2), 1 on axis."""
    p = np.asarray(position, dtype=np.float64)
    if beam.axis == (0.0, 0.0, 1.0) and beam.offset_m == (0.0, 0.0, 0.0) \
            and p.ndim == 2:
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        return np.exp((-2.0 / beam.waist_m ** 2) * r2)
    p = p - np.asarray(beam.offset_m)
    axis = np.asarray(beam.axis)
    along = p @ axis
    r2 = np.einsum("...i,...i->...", p, p) - along ** 2
    r2 = np.maximum(r2, 0.0)
    return np.exp(-2.0 * r2 / beam.waist_m ** 2)


def _draw_boundary_atoms(cfg: EnsembleConfig, ids: np.ndarray,
                         counters: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reservoir atoms entering through the tracked boundary.

    Surface element chosen by area, inward-normal speed from the
    flux-weighted (Rayleigh) distribution, tangential components Maxwell.
    This is the stationary wall flux, so the bulk distribution is preserved.
    """
    seed = cfg.rng_seed
    r_max = cfg.tracked_radius_m * (1.0 - 1e-9)
    length = cfg.cell_length_m
    sigma = velocity_sigma(cfg.species, cfg.temperature_k)
    m = ids.size

    u_surf = hashed_uniform(seed, ids, counters, 0)
    u1 = hashed_uniform(seed, ids, counters, 1)
    u2 = hashed_uniform(seed, ids, counters, 2)
    u_ray = hashed_uniform(seed, ids, counters, 3)
    g1a = hashed_uniform(seed, ids, counters, 4)
    g1b = hashed_uniform(seed, ids, counters, 5)
    g2a = hashed_uniform(seed, ids, counters, 6)
    g2b = hashed_uniform(seed, ids, counters, 7)

    n1 = np.sqrt(-2.0 * np.log(g1a)) * np.cos(2.0 * np.pi * g1b)
    n2 = np.sqrt(-2.0 * np.log(g2a)) * np.cos(2.0 * np.pi * g2b)
    v_in = sigma * np.sqrt(-2.0 * np.log(u_ray))   # flux-weighted normal speed

    side_area = 2.0 * np.pi * r_max * length
    cap_area = 2.0 * np.pi * r_max ** 2
    on_side = u_surf < side_area / (side_area + cap_area)

    pos = np.empty((m, 3))
    vel = np.empty((m, 3))

    # lateral surface: inward radial normal
    phi = 2.0 * np.pi * u1
    cphi, sphi = np.cos(phi), np.sin(phi)
    pos_side = np.column_stack([r_max * cphi, r_max * sphi, (u2 - 0.5) * length])
    vel_side = np.column_stack([-v_in * cphi - n1 * sphi,
                                -v_in * sphi + n1 * cphi,
                                n2 * np.ones(m)])
    # end caps: inward axial normal
    rho = r_max * np.sqrt(u1)
    top = u2 < 0.5
    z_cap = np.where(top, 0.5 * length * (1.0 - 1e-9), -0.5 * length * (1.0 - 1e-9))
    phi2 = 2.0 * np.pi * ((2.0 * u2) % 1.0)
    pos_cap = np.column_stack([rho * np.cos(phi2), rho * np.sin(phi2), z_cap])
    vel_cap = np.column_stack([n1, n2, np.where(top, -v_in, v_in)])

    pos[on_side] = pos_side[on_side]
    vel[on_side] = vel_side[on_side]
    pos[~on_side] = pos_cap[~on_side]
    vel[~on_side] = vel_cap[~on_side]
    return pos, vel


def escaped_mask(ens: Ensemble, cfg: EnsembleConfig) -> np.ndarray:
    r2 = ens.positions[:, 0] ** 2 + ens.positions[:, 1] ** 2
    out_r = r2 > cfg.tracked_radius_m ** 2
    out_z = np.abs(ens.positions[:, 2]) > 0.5 * cfg.cell_length_m
    return out_r | out_z


def exchange_escaped(ens: Ensemble, cfg: EnsembleConfig,
                     reservoir_pop1: float = 1.0) -> np.ndarray:
    """Replace out-of-bounds atoms with reservoir atoms; returns the
    replaced-index array.  Replacement draws are keyed per (atom, event)."""
    mask = escaped_mask(ens, cfg)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return idx
    pos, vel = _draw_boundary_atoms(cfg, idx, ens.wall_events[idx])
    ens.positions[idx] = pos
    ens.velocities[idx] = vel
    ens.pop1[idx] = reservoir_pop1
    ens.amp[idx] = 0.0
    ens.wall_events[idx] += 1
    return idx


def advance_ballistic(ens: Ensemble, dt: float, cfg: EnsembleConfig,
                      reservoir_pop1: float = 1.0) -> Ensemble:
    """Free flight over dt with boundary exchange; atom count conserved."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return ens
    ens.positions += ens.velocities * dt
    exchange_escaped(ens, cfg, reservoir_pop1)
    return ens


def replace_escaped(atom: Atom, cfg: EnsembleConfig, atom_index: int = 0,
                    event_index: int = 0) -> Atom:
    """Single-atom boundary exchange.

    The returned atom sits on the tracked boundary with a fresh thermal
    velocity, full level-1 population and no coherence (freshly pumped
    reservoir).  Raises if the atom is still inside the boundary.
    """
    x, y, z = atom.position
    inside_r = x * x + y * y <= cfg.tracked_radius_m ** 2
    inside_z = abs(z) <= 0.5 * cfg.cell_length_m
    if inside_r and inside_z:
        raise ValueError("replace_escaped called on an in-bounds atom")
    ids = np.asarray([atom_index])
    counters = np.asarray([event_index])
    pos, vel = _draw_boundary_atoms(cfg, ids, counters)
    return Atom(position=tuple(pos[0]), velocity=tuple(vel[0]),
                pop1=1.0, pop2=0.0, amp=0.0 + 0.0j)
