"""Run configuration: documented key-value text format with unit-suffixed
keys, strict validation with line diagnostics, canonical echo and hashing,
and builders wiring a RunConfig into simulation objects.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .ensemble import BeamGeometry, EnsembleConfig, SpeciesConstants
from .protocol import Beams, ProtocolParams, SequenceTimings
from .regeneration import GainModel
from .spinwave import WaveVectors, make_wavevectors
from .constants import PLANCK_H, SPEED_OF_LIGHT


class ConfigError(ValueError):
    """Configuration file rejected; message carries line-level context."""


def _positive(x):
    return x > 0


def _nonnegative(x):
    return x >= 0


def _fraction(x):
    return 0.0 <= x <= 1.0


# section -> key -> (type, default, validator or None, doc)
SCHEMA = {
    "run": {
        "master_seed": (int, 7, None, "master RNG seed"),
        "n_atoms": (int, 200_000, _positive, "tracked sample size"),
        "dt_ns": (float, 5.0, _positive, "integrator step, ns (<= 10 default)"),
        "trial_count": (int, 1, _positive, "independent Monte-Carlo trials"),
    },
    "ensemble": {
        "temperature_k": (float, 345.15, _positive, "vapor temperature, K"),
        "cell_length_mm": (float, 75.0, _positive, "cell length, mm"),
        "cell_radius_mm": (float, 10.0, _positive, "physical cell bore radius, mm"),
        "sim_radius_mm": (float, 1.0, _positive, "tracked sub-cylinder radius, mm"),
        "atomic_mass_kg": (float, 2.2069468e-25, _positive, "atom mass, kg"),
        "hyperfine_splitting_ghz": (float, 9.192631770, _positive,
                                    "ground-state splitting, GHz"),
        "signal_wavelength_nm": (float, 852.3, _positive, "signal line, nm"),
        "assist_wavelength_nm": (float, 894.6, _positive, "assisted line, nm"),
    },
    "beams": {
        "signal_waist_um": (float, 240.0, _positive, "signal beam waist, um"),
        "control_waist_um": (float, 300.0, _positive, "control beam waist, um"),
        "pump_waist_um": (float, 3000.0, _positive, "pump beam waist, um"),
        "probe_waist_um": (float, 240.0, _positive, "probe beam waist, um"),
        "assist_laser_waist_um": (float, 190.0, _positive,
                                  "assisted laser waist, um"),
        "assist_laser_offset_mm": (float, 1.0, _nonnegative,
                                   "assisted laser transverse offset, mm"),
        "assist_laser_tilt_mrad": (float, 4.0, _nonnegative,
                                   "assisted laser tilt from signal axis, mrad"),
        "assist_region_waist_um": (float, 330.0, _positive,
                                   "scattered-light gain region waist, um"),
        "depol_region_waist_um": (float, 415.0, _positive,
                                  "scattered-light depolarization waist, um"),
    },
    "sequence": {
        "write_time_ns": (float, 450.0, _positive, "write pulse center, ns"),
        "read1_time_ns": (float, 1170.0, _positive, "first read center, ns"),
        "read2_time_ns": (float, 1500.0, _positive, "second read center, ns"),
        "assist_start_ns": (float, 660.0, _positive, "assist window start, ns"),
        "assist_duration_ns": (float, 330.0, _positive, "assist window length, ns"),
        "pump_off_lead_ns": (float, 100.0, _positive,
                             "pump shutoff lead before the write, ns"),
        "pulse_fwhm_ns": (float, 70.0, _positive, "control/signal pulse FWHM, ns"),
        "assist_enabled": (bool, True, None, "apply the assist window in `simulate`"),
        "signal_enabled": (bool, True, None, "inject the input signal pulse"),
    },
    "gain": {
        "gain_rate_per_s": (float, 4.960938e6, _nonnegative,
                            "parametric coupling rate (calibrated), 1/s"),
        "depol_rate_per_s": (float, 6.0e6, _nonnegative,
                             "on-axis assisted depolarization rate, 1/s"),
        "write_efficiency": (float, 0.9, _fraction, "absorbed input fraction"),
        "read_min_completeness": (float, 0.68, _fraction,
                                  "extraction floor for any matched wave"),
        "read_purity_floor": (float, 0.97, _fraction,
                              "mode quality where completeness ramps up"),
        "read_purity_knee": (float, 0.995, _positive,
                             "mode quality giving complete readout"),
        "input_energy_pj": (float, 13.0, _positive, "input signal pulse energy, pJ"),
        "detection_efficiency": (float, 0.07, _fraction,
                                 "total signal-photon detection efficiency"),
        "assist_decoherence_factor": (float, 0.15, _fraction,
                                      "stored-wave decoherence per pumping event"),
        "fwm_intrinsic_photons": (float, 0.8, _nonnegative,
                                  "constant four-wave-mixing noise, photons"),
        "filter_transmission": (float, 0.7, _fraction,
                                "frequency filter peak transmission"),
        "filter_extinction": (float, 1e7, _positive, "filter extinction ratio"),
    },
    "relaxation": {
        "dark_lifetime_us": (float, 18.0, _positive,
                             "hyperfine polarization lifetime in the dark, us"),
        "equilibrium_pop1": (float, 0.5, _fraction,
                             "unpolarized level-1 population"),
        "optical_depth": (float, 2.0, _positive,
                          "probe absorption optical depth at pop2 = 1"),
    },
}


@dataclass
class RunConfig:
    values: dict            # section -> key -> typed value
    defaults_applied: list  # "section.key" strings

    def get(self, section: str, key: str):
        return self.values[section][key]


def _parse_scalar(raw: str, typ, lineno: int, key: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        return typ(raw)
    except ValueError:
        raise ConfigError(
            f"line {lineno}: value {raw!r} for key {key!r} is not a valid "
            f"{typ.__name__}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate the key-value config format.

    Unknown sections/keys, bad types and out-of-range values are rejected
    with the offending line number; omitted keys take schema defaults.
    """
    values: dict = {}
    seen: set = set()
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        typ, _, validator, _ = SCHEMA[section][key]
        value = _parse_scalar(raw_value, typ, lineno, key)
        if validator is not None and not validator(value):
            raise ConfigError(
                f"line {lineno}: key {key!r} = {value!r} out of valid range")
        values.setdefault(section, {})[key] = value

    defaults_applied = []
    for section_name, keys in SCHEMA.items():
        values.setdefault(section_name, {})
        for key, (typ, default, _, _) in keys.items():
            if key not in values[section_name]:
                values[section_name][key] = default
                defaults_applied.append(f"{section_name}.{key}")
    return RunConfig(values=values, defaults_applied=defaults_applied)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def echo_config(rc: RunConfig) -> str:
    """Canonical text form: every key, schema order, 9 significant digits."""
    lines = []
    for section_name, keys in SCHEMA.items():
        lines.append(f"[{section_name}]")
        for key, (typ, _, _, doc) in keys.items():
            value = rc.values[section_name][key]
            if typ is float:
                rendered = format(value, ".9g")
            elif typ is bool:
                rendered = "true" if value else "false"
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}  # {doc}")
        lines.append("")
    return "\n".join(lines)


def config_hash(rc: RunConfig) -> str:
    return hashlib.sha256(echo_config(rc).encode("utf-8")).hexdigest()


def default_config(**overrides) -> RunConfig:
    """Schema defaults; overrides given as {'section.key': value}."""
    rc = parse_config("")
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {dotted!r}")
        rc.values[section][key] = value
        if dotted in rc.defaults_applied:
            rc.defaults_applied.remove(dotted)
    return rc


# ---------------------------------------------------------------------------
# builders


def build_species(rc: RunConfig) -> SpeciesConstants:
    e = rc.values["ensemble"]
    return SpeciesConstants(
        atomic_mass_kg=e["atomic_mass_kg"],
        hyperfine_splitting_hz=e["hyperfine_splitting_ghz"] * 1e9,
        signal_wavelength_m=e["signal_wavelength_nm"] * 1e-9,
        assist_wavelength_m=e["assist_wavelength_nm"] * 1e-9,
    )


def build_ensemble_config(rc: RunConfig, seed: int | None = None) -> EnsembleConfig:
    e = rc.values["ensemble"]
    return EnsembleConfig(
        n_atoms=rc.get("run", "n_atoms"),
        temperature_k=e["temperature_k"],
        cell_length_m=e["cell_length_mm"] * 1e-3,
        cell_radius_m=e["cell_radius_mm"] * 1e-3,
        sim_radius_m=e["sim_radius_mm"] * 1e-3,
        species=build_species(rc),
        rng_seed=rc.get("run", "master_seed") if seed is None else seed,
    )


def build_beams(rc: RunConfig) -> Beams:
    b = rc.values["beams"]
    return Beams(
        signal=BeamGeometry.along_z(b["signal_waist_um"] * 1e-6),
        control=BeamGeometry.along_z(b["control_waist_um"] * 1e-6),
        pump=BeamGeometry.along_z(b["pump_waist_um"] * 1e-6),
        probe=BeamGeometry.along_z(b["probe_waist_um"] * 1e-6),
        assist_laser=BeamGeometry.along_z(
            b["assist_laser_waist_um"] * 1e-6,
            offset_m=(b["assist_laser_offset_mm"] * 1e-3, 0.0, 0.0),
            tilt_rad=b["assist_laser_tilt_mrad"] * 1e-3),
    )


def build_gain_model(rc: RunConfig) -> GainModel:
    b = rc.values["beams"]
    g = rc.values["gain"]
    return GainModel(
        gain_rate=g["gain_rate_per_s"],
        depol_rate=g["depol_rate_per_s"],
        assist_beam=BeamGeometry.along_z(b["assist_region_waist_um"] * 1e-6),
        depol_beam=BeamGeometry.along_z(b["depol_region_waist_um"] * 1e-6),
        coherence_loss_factor=g["assist_decoherence_factor"],
    )


def build_vectors(rc: RunConfig) -> WaveVectors:
    beams = build_beams(rc)
    return make_wavevectors(build_species(rc), beams.signal, beams.control,
                            beams.assist_laser)


def input_photon_number(rc: RunConfig) -> float:
    g = rc.values["gain"]
    e = rc.values["ensemble"]
    photon_energy = PLANCK_H * SPEED_OF_LIGHT / (e["signal_wavelength_nm"] * 1e-9)
    return g["input_energy_pj"] * 1e-12 / photon_energy


def build_params(rc: RunConfig) -> ProtocolParams:
    g = rc.values["gain"]
    r = rc.values["relaxation"]
    s = rc.values["sequence"]
    return ProtocolParams(
        write_efficiency=g["write_efficiency"],
        read_min_completeness=g["read_min_completeness"],
        read_purity_floor=g["read_purity_floor"],
        read_purity_knee=g["read_purity_knee"],
        dark_lifetime_s=r["dark_lifetime_us"] * 1e-6,
        equilibrium_pop1=r["equilibrium_pop1"],
        input_photons=input_photon_number(rc),
        detection_efficiency=g["detection_efficiency"],
        fwm_intrinsic_photons=g["fwm_intrinsic_photons"],
        optical_depth=r["optical_depth"],
        pulse_fwhm_s=s["pulse_fwhm_ns"] * 1e-9,
    )


def build_timings(rc: RunConfig) -> SequenceTimings:
    s = rc.values["sequence"]
    return SequenceTimings(
        write_time=s["write_time_ns"] * 1e-9,
        read1_time=s["read1_time_ns"] * 1e-9,
        read2_time=s["read2_time_ns"] * 1e-9,
        assist_start=s["assist_start_ns"] * 1e-9,
        assist_duration=s["assist_duration_ns"] * 1e-9,
        pump_off_lead=s["pump_off_lead_ns"] * 1e-9,
        pulse_fwhm=s["pulse_fwhm_ns"] * 1e-9,
    )


def build_world(rc: RunConfig, seed: int | None = None):
    """(ensemble cfg, beams, gain model, wavevectors, params, timings, dt)."""
    return (build_ensemble_config(rc, seed), build_beams(rc),
            build_gain_model(rc), build_vectors(rc), build_params(rc),
            build_timings(rc), rc.get("run", "dt_ns") * 1e-9)
