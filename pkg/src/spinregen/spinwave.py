"""Collective spin-wave state: imprint, motional dephasing, phase-matched
retrieval, interference sums, and wavevector bookkeeping.

Conventions
-----------
Each atom carries a complex amplitude whose imprint phase is the stored
pattern exp(i dk . r) evaluated at the atom's position at write time.  The
amplitude phase is *not* advanced as atoms move; the phase-matched overlap
in `retrieval_efficiency` is evaluated against the pattern at the atoms'
current positions, so motional dephasing and beam-transit loss emerge from
position updates alone.  `dephase_tick` is the equivalent amplitude-side
bookkeeping (amp *= exp(i dk . v dt)); exactly one of the two conventions
may be applied to a given state.

Normalization: the total excitation number is sum_j |amp_j|^2, scaled at
write so one full input pulse maps to 1.0.  Retrieval efficiency is
|sum_j w_j amp_j conj(pattern_j)|^2 / sum_j w_j^2, which returns the
write-in efficiency for a freshly imprinted, unmoved state read in the
matched mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .ensemble import BeamGeometry, Ensemble, GeometryError, SpeciesConstants, beam_weight


@dataclass
class WaveVectors:
    """Signal/control/assist wavevectors and the stored-pattern wavevector."""

    k_signal: np.ndarray     # rad/m, (3,)
    k_control: np.ndarray
    k_assist: np.ndarray
    species: SpeciesConstants

    def __post_init__(self):
        self.k_signal = np.asarray(self.k_signal, dtype=np.float64)
        self.k_control = np.asarray(self.k_control, dtype=np.float64)
        self.k_assist = np.asarray(self.k_assist, dtype=np.float64)
        expected = 2.0 * np.pi * self.species.hyperfine_splitting_hz / SPEED_OF_LIGHT
        actual = float(np.linalg.norm(self.delta_k))
        if abs(actual - expected) > 1e-3 * expected:
            raise ValueError(
                f"|k_signal - k_control| = {actual:.6g} rad/m, expected "
                f"{expected:.6g} rad/m for co-propagating write beams")

    @property
    def delta_k(self) -> np.ndarray:
        return self.k_signal - self.k_control


def make_wavevectors(species: SpeciesConstants,
                     signal_beam: BeamGeometry,
                     control_beam: BeamGeometry,
                     assist_beam: BeamGeometry) -> WaveVectors:
    """Build wavevectors from beam axes; the control frequency sits one
    hyperfine splitting below the signal."""
    w_signal = 2.0 * np.pi * SPEED_OF_LIGHT / species.signal_wavelength_m
    w_control = w_signal - 2.0 * np.pi * species.hyperfine_splitting_hz
    k_s = (w_signal / SPEED_OF_LIGHT) * np.asarray(signal_beam.axis)
    k_c = (w_control / SPEED_OF_LIGHT) * np.asarray(control_beam.axis)
    k_a = (2.0 * np.pi / species.assist_wavelength_m) * np.asarray(assist_beam.axis)
    return WaveVectors(k_s, k_c, k_a, species)


def spinwave_wavelength(species: SpeciesConstants) -> float:
    """Spatial period 2 pi / |dk| = c / f_hf of the stored pattern."""
    if species.hyperfine_splitting_hz <= 0:
        raise ValueError("hyperfine splitting must be positive")
    return SPEED_OF_LIGHT / species.hyperfine_splitting_hz


def pattern_phase(ens: Ensemble, vectors: WaveVectors) -> np.ndarray:
    """exp(i dk . r_j) at the atoms' current positions."""
    return np.exp(1j * (ens.positions @ vectors.delta_k))


def write_mode(signal_beam: BeamGeometry, control_beam: BeamGeometry) -> BeamGeometry:
    """Effective stored-mode geometry: the signal-control field product is
    Gaussian with 1/w^2 = (1/w_s^2 + 1/w_c^2)/2."""
    w_eff = np.sqrt(2.0 / (signal_beam.waist_m ** -2 + control_beam.waist_m ** -2))
    return BeamGeometry(axis=signal_beam.axis, waist_m=float(w_eff),
                        offset_m=signal_beam.offset_m)


def imprint_write(ens: Ensemble, vectors: WaveVectors,
                  signal_beam: BeamGeometry, control_beam: BeamGeometry,
                  write_efficiency: float) -> tuple[Ensemble, float]:
    """Map an input pulse onto the ensemble.

    Adds amp_j = c * w_j * exp(i dk . r_j) with w_j the signal-control mode
    weight and c fixed so the imprinted excitation number equals
    ``write_efficiency`` (input pulse scale = 1).  Returns the ensemble and
    the leaked fraction 1 - write_efficiency.
    """
    if not 0.0 <= write_efficiency <= 1.0:
        raise ValueError("write_efficiency must lie in [0, 1]")
    if write_efficiency == 0.0:
        return ens, 1.0
    w = np.sqrt(beam_weight(ens.positions, signal_beam)
                * beam_weight(ens.positions, control_beam))
    norm2 = float(np.sum(w * w))
    if not np.any(w > 1e-6):
        raise GeometryError("no atom overlaps the write mode (weight > 1e-6)")
    scale = np.sqrt(write_efficiency / norm2)
    old_abs2 = np.abs(ens.amp) ** 2
    ens.amp += scale * w * pattern_phase(ens, vectors)
    transfer_population(ens, old_abs2)
    return ens, 1.0 - write_efficiency


def transfer_population(ens: Ensemble, old_abs2: np.ndarray) -> None:
    """Move level population with the stored excitation so the per-atom
    coherence bound |amp|^2 <= pop1 pop2 stays satisfied."""
    np.clip(ens.pop1 - (np.abs(ens.amp) ** 2 - old_abs2), 0.0, 1.0,
            out=ens.pop1)


def dephase_tick(ens: Ensemble, vectors: WaveVectors, dt: float) -> Ensemble:
    """Amplitude-side motional phase bookkeeping: amp *= exp(i dk . v dt).

    Negative dt applies the exact inverse rotation.
    """
    if dt == 0:
        return ens
    ens.amp *= np.exp(1j * (ens.velocities @ vectors.delta_k) * dt)
    return ens


def matched_projection(ens: Ensemble, vectors: WaveVectors,
                       read_beam: BeamGeometry,
                       pattern: np.ndarray | None = None):
    """Overlap of the stored amplitudes with the read mode.

    Returns (S, norm2, w, pattern) with S = sum w_j amp_j conj(pattern_j)
    and norm2 = sum w_j^2; |S|^2 / norm2 is the retrieval efficiency.
    """
    if pattern is None:
        pattern = pattern_phase(ens, vectors)
    w = beam_weight(ens.positions, read_beam)
    s = complex(np.sum(w * ens.amp * np.conj(pattern)))
    norm2 = float(np.sum(w * w))
    return s, norm2, w, pattern


def retrieval_efficiency(ens: Ensemble, vectors: WaveVectors,
                         read_beam: BeamGeometry,
                         pattern: np.ndarray | None = None) -> float:
    """Phase-matched mode overlap in [0, n_excitations]."""
    s, norm2, _, _ = matched_projection(ens, vectors, read_beam, pattern)
    if norm2 == 0.0:
        return 0.0
    return abs(s) ** 2 / norm2


def mode_purity(ens: Ensemble, vectors: WaveVectors,
                read_beam: BeamGeometry,
                pattern: np.ndarray | None = None) -> float:
    """Fraction of the beam-weighted excitation that is phase matched.

    Normalized so a freshly imprinted state scores 1; motional distortion
    lowers it.  Used by the read model (retrieval completeness depends on
    the spatial regularity of the stored wave).
    """
    s, norm2, w, _ = matched_projection(ens, vectors, read_beam, pattern)
    w2a2 = float(np.sum(w * w * np.abs(ens.amp) ** 2))
    if w2a2 <= 0.0 or norm2 == 0.0:
        return 0.0
    norm4 = float(np.sum(w ** 4))
    return (abs(s) ** 2 / norm2) * norm4 / (norm2 * w2a2)


def excitation_number(ens: Ensemble) -> float:
    return float(np.sum(np.abs(ens.amp) ** 2))


@dataclass
class SpinWaveState:
    """Collective summary: normalized matched amplitude, excitation count,
    the conjugate partner-mode mean field, and the incoherent noise channel."""

    collective_amp: complex
    n_excitations: float
    partner_amp: complex = 0.0 + 0.0j

    def __post_init__(self):
        if self.n_excitations < -1e-12:
            raise ValueError("n_excitations must be >= 0")
        if abs(self.collective_amp) ** 2 > 1.0 + 1e-9:
            raise ValueError("normalized |collective_amp|^2 must be <= 1")


def compute_spinwave_state(ens: Ensemble, vectors: WaveVectors,
                           read_beam: BeamGeometry,
                           partner_amp: complex = 0.0 + 0.0j) -> SpinWaveState:
    n_exc = excitation_number(ens)
    s, norm2, _, _ = matched_projection(ens, vectors, read_beam)
    if n_exc > 0 and norm2 > 0:
        coll = s / np.sqrt(norm2 * n_exc)   # cosine of the matching angle
    else:
        coll = 0.0 + 0.0j
    return SpinWaveState(collective_amp=complex(coll), n_excitations=n_exc,
                         partner_amp=partner_amp)


def interference_sum(positions, q) -> complex:
    """(1/N) sum_j exp(i q . r_j); 1 exactly at q = 0."""
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    if positions.shape[0] == 0:
        raise ValueError("at least one position required")
    q = np.asarray(q, dtype=np.float64)
    return complex(np.mean(np.exp(1j * (positions @ q))))


def momentum_mismatch(vectors: WaveVectors, k_scattered) -> float:
    """|(k_assist - k_scattered) - (k_signal - k_control)| in rad/m."""
    k_scattered = np.asarray(k_scattered, dtype=np.float64)
    return float(np.linalg.norm((vectors.k_assist - k_scattered) - vectors.delta_k))
