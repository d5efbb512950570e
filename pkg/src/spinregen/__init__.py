"""spinregen: Monte-Carlo simulator of a warm-vapor Raman memory whose
stored spin wave is actively regenerated by an auxiliary light field."""

__version__ = "0.1.0"

from .ensemble import (
    Atom,
    BeamGeometry,
    Ensemble,
    EnsembleConfig,
    SpeciesConstants,
    advance_ballistic,
    beam_weight,
    mean_thermal_speed,
    replace_escaped,
    sample_ensemble,
)
from .regeneration import (
    GainMoments,
    GainModel,
    apply_gain_tick,
    calibrate_gain_rate,
    depolarize_tick,
    excitation_variance,
    mean_excitation,
    noise_budget,
    two_mode_gain_oracle,
)
from .spinwave import (
    SpinWaveState,
    WaveVectors,
    dephase_tick,
    imprint_write,
    interference_sum,
    make_wavevectors,
    momentum_mismatch,
    retrieval_efficiency,
    spinwave_wavelength,
)
from .protocol import (
    Beams,
    ProtocolParams,
    PulseEvent,
    PulseSequence,
    SequenceTimings,
    TraceResult,
    franzen_tp,
    lifetime_scan,
    pulse_train_experiment,
    run_sequence,
    tp_experiment,
)
