"""Assisted-light physics: two-mode parametric gain on the stored wave,
an exact truncated-number-basis oracle for its moments, per-step gain and
depolarization ticks, gain-rate calibration, and the photon noise budget.

Gain model
----------
The scattered assisted light pumps a two-mode parametric process on the
phase-matched collective mode.  Per step the matched amplitude A and the
conjugate partner mean field B* undergo the exact hyperbolic rotation

    A  -> A cosh(theta) + B* sinh(theta),   theta = kappa_eff dt
    B* -> B* cosh(theta) + A sinh(theta)

with kappa_eff = gain_rate * (beam-weighted level-1 population in the
illuminated region).  The rotation composes exactly, so m steps of dt equal
one step of m dt while the region population is static.  Amplitude growth
is deposited onto atoms along the illuminated mode (assist weight * pop1 *
pattern phase), which is what lets freshly arrived atoms join the wave in
the correct phase.  The vacuum-seeded incoherent excitation is tracked in a
separate second-moment channel, never added to the matched amplitude; its
retrievable fraction is bounded through the interference sum over atom
positions at the noise-mode momentum mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply

from .ensemble import BeamGeometry, Ensemble, beam_weight
from .spinwave import SpinWaveState, WaveVectors


class StepSizeError(ValueError):
    """Gain step exceeds the per-tick limit gain_rate * dt <= 0.05."""


class FockCutoffError(ValueError):
    """Oracle truncation too small for the requested evolution."""


class CalibrationError(RuntimeError):
    """Gain-rate bisection could not bracket the target efficiency."""

    def __init__(self, message: str, curve=None):
        super().__init__(message)
        self.curve = curve or []


@dataclass
class GainModel:
    """Parametric-gain and depolarization parameters of the assisted light.

    ``assist_beam`` is the illuminated region around the stored wave where
    scattered assisted photons provide gain; ``depol_beam`` the (broader)
    region over which they pump atoms out of level 1.  The physical
    assisted laser itself is offset from the signal axis and enters only
    through the noise-mode momentum mismatch.
    """

    gain_rate: float                      # 1/s, coupling coefficient
    depol_rate: float                     # 1/s on-axis level-1 pumping rate
    assist_beam: BeamGeometry
    depol_beam: BeamGeometry | None = None
    coherence_loss_factor: float = 0.15   # stored-wave decoherence per pumping event
    assist_on: bool = False

    def __post_init__(self):
        if self.gain_rate < 0 or self.depol_rate < 0:
            raise ValueError("rates must be >= 0")
        if not 0.0 <= self.coherence_loss_factor <= 1.0:
            raise ValueError("coherence_loss_factor must lie in [0, 1]")

    @property
    def depol_region(self) -> BeamGeometry:
        return self.depol_beam if self.depol_beam is not None else self.assist_beam


@dataclass(frozen=True)
class GainMoments:
    mean: float
    variance: float

    def __post_init__(self):
        if self.mean < -1e-12 or self.variance < -1e-12:
            raise ValueError("moments must be >= 0")


def mean_excitation(n0: float, gain_rate: float, t: float) -> float:
    """n0 cosh^2(kt) + sinh^2(kt): amplified excitations plus the
    spontaneous vacuum-seeded term."""
    if t < 0:
        raise ValueError("t must be >= 0")
    kt = gain_rate * t
    return n0 * np.cosh(kt) ** 2 + np.sinh(kt) ** 2


def excitation_variance(n0: float, gain_rate: float, t: float) -> float:
    """sinh^2(2kt) (1 + n0) / 4 for a definite initial excitation number."""
    if t < 0:
        raise ValueError("t must be >= 0")
    kt = gain_rate * t
    return np.sinh(2.0 * kt) ** 2 * (1.0 + n0) / 4.0


def two_mode_gain_oracle(n0: int, kappa_t: float,
                         fock_cutoff: int) -> tuple[GainMoments, float]:
    """Exact moments of the excitation number under two-mode squeezing.

    Evolves |n0, 0> under the generator kappa_t (a'b' - ab) on the number
    ladder |n0+k, k>, k = 0..fock_cutoff, and returns the mean/variance of
    the excitation number together with the truncation-tail estimate.
    The ladder representation is exact: the pair process only populates
    states with equal added quanta in both modes.
    """
    if n0 < 0 or int(n0) != n0:
        raise ValueError("n0 must be a nonnegative integer")
    if kappa_t > 2.0:
        raise ValueError("kappa_t must be <= 2")
    min_cutoff = int(n0 + 10 * (1 + 5 * kappa_t))
    if fock_cutoff < min_cutoff:
        raise FockCutoffError(
            f"fock_cutoff {fock_cutoff} below documented minimum {min_cutoff}")

    k = np.arange(fock_cutoff, dtype=np.float64)
    up = np.sqrt((n0 + k[:-1] + 1.0) * (k[:-1] + 1.0))   # a'b' ladder step
    gen = diags([up, -up], [-1, 1], format="csc") * kappa_t
    psi0 = np.zeros(fock_cutoff)
    psi0[0] = 1.0
    psi = psi0 if kappa_t == 0.0 else expm_multiply(gen, psi0)

    prob = psi ** 2
    tail = float(prob[-1] + abs(1.0 - prob.sum()))
    if tail > 1e-10:
        raise FockCutoffError(
            f"population at cutoff {tail:.3e} exceeds 1e-10; raise fock_cutoff")
    n_vals = n0 + k
    mean = float(prob @ n_vals)
    var = float(prob @ (n_vals - mean) ** 2)
    return GainMoments(mean=mean, variance=max(var, 0.0)), tail


@dataclass
class NoiseChannel:
    """Second moments of the vacuum-seeded spontaneous channel.

    Tracks the symmetric pair occupation n and the anomalous cross moment
    m = <ab>; the exact per-step squeeze map composes to n = sinh^2(total)
    for vacuum input.
    """

    occupation: float = 0.0
    cross: float = 0.0

    def squeeze(self, theta: float) -> None:
        c, s = np.cosh(theta), np.sinh(theta)
        n, m = self.occupation, self.cross
        self.occupation = (c * c + s * s) * n + s * s + 2.0 * c * s * m
        self.cross = (c * c + s * s) * m + c * s * (2.0 * n + 1.0)

    @property
    def mean_excitations(self) -> float:
        return self.occupation


def apply_gain_tick(ens: Ensemble, state: SpinWaveState, model: GainModel,
                    vectors: WaveVectors, dt: float,
                    noise: NoiseChannel | None = None,
                    pattern: np.ndarray | None = None,
                    weights: np.ndarray | None = None,
                    update_summary: bool = True) -> tuple[Ensemble, SpinWaveState]:
    """One parametric-gain step on the illuminated phase-matched mode.

    Requires gain_rate * dt <= 0.05.  Updates atom amplitudes, the partner
    mean field carried in ``state``, and (when given) the incoherent noise
    channel.  With gain_rate = 0 everything is left untouched.
    ``update_summary=False`` skips the collective-amplitude/excitation
    refresh in ``state`` (hot loops recompute those at read events).
    """
    if model.gain_rate * dt > 0.05 + 1e-12:
        raise StepSizeError(
            f"gain_rate*dt = {model.gain_rate * dt:.3g} exceeds 0.05")
    if model.gain_rate == 0.0 or dt == 0.0:
        return ens, state

    if pattern is None:
        from .spinwave import pattern_phase
        pattern = pattern_phase(ens, vectors)
    if weights is None:
        weights = beam_weight(ens.positions, model.assist_beam)

    wp = weights * ens.pop1
    w_sum = float(np.sum(weights))
    if w_sum <= 0.0:
        return ens, state
    pop1_frac = float(np.sum(wp)) / w_sum
    theta = model.gain_rate * pop1_frac * dt
    if theta == 0.0:
        return ens, state

    mode = wp * pattern                           # illuminated-mode shape
    mode_norm = float(np.sqrt(np.sum(np.abs(mode) ** 2)))
    if mode_norm <= 0.0:
        return ens, state
    mode /= mode_norm

    a = complex(np.sum(np.conj(mode) * ens.amp))
    b = state.partner_amp
    ch, sh = np.cosh(theta), np.sinh(theta)
    a_new = a * ch + b * sh
    b_new = b * ch + a * sh
    old_abs2 = np.abs(ens.amp) ** 2
    ens.amp += (a_new - a) * mode
    state.partner_amp = b_new
    from .spinwave import transfer_population
    transfer_population(ens, old_abs2)

    if noise is not None:
        noise.squeeze(theta)

    if update_summary:
        from .spinwave import excitation_number
        state.n_excitations = excitation_number(ens)
        s = complex(np.sum(weights * ens.amp * np.conj(pattern)))
        norm2 = float(np.sum(weights ** 2))
        if state.n_excitations > 0 and norm2 > 0:
            state.collective_amp = s / np.sqrt(norm2 * state.n_excitations)
    return ens, state


def depolarize_tick(ens: Ensemble, model: GainModel, dt: float) -> Ensemble:
    """Assisted-light pumping out of level 1: pop1 *= exp(-R w dt) with w
    the depolarization-region weight; populations stay normalized.

    Pumping events scatter the atom, so the stored amplitude it carries is
    damped at coherence_loss_factor * R w / 2 alongside the population.
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if model.depol_rate == 0.0 or dt == 0.0:
        return ens
    w = beam_weight(ens.positions, model.depol_region)
    ens.pop1 *= np.exp(-model.depol_rate * w * dt)
    if model.coherence_loss_factor > 0.0:
        ens.amp *= np.exp(-0.5 * model.coherence_loss_factor
                          * model.depol_rate * w * dt)
    return ens


def noise_budget(raw_noise_counts: float, detection_efficiency: float) -> float:
    """Intrinsic photons behind the detection chain: raw / efficiency."""
    if detection_efficiency <= 0.0:
        raise ValueError("detection efficiency must be positive")
    return raw_noise_counts / detection_efficiency


def calibrate_gain_rate(target: float, evaluate, gain_rate_max: float,
                        tol: float = 1e-3, max_iter: int = 60) -> float:
    """Bisection for the gain rate reproducing a target retrieval.

    ``evaluate`` maps a gain rate to the simulated efficiency and must be
    monotone increasing on [0, gain_rate_max].  Raises CalibrationError
    with the sampled diagnostic curve when the target cannot be bracketed.
    """
    lo, hi = 0.0, float(gain_rate_max)
    f_lo = evaluate(lo)
    f_hi = evaluate(hi)
    curve = [(lo, f_lo), (hi, f_hi)]
    if target < f_lo - tol:
        raise CalibrationError(
            f"target {target:.4g} below zero-gain efficiency {f_lo:.4g}", curve)
    if target > f_hi + tol:
        raise CalibrationError(
            f"target {target:.4g} unreachable below gain rate {hi:.4g}/s "
            f"(max efficiency {f_hi:.4g})", curve)
    if abs(f_lo - target) <= tol:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = evaluate(mid)
        curve.append((mid, f_mid))
        if abs(f_mid - target) <= tol:
            return mid
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
