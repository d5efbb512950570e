"""Counter-based deterministic random draws.

Boundary-exchange redraws are keyed by (seed, atom index, per-atom event
counter) instead of consuming a shared stream.  The same wall event then
receives the same replacement atom no matter how many integrator steps were
taken to reach it, which keeps halved-dt runs comparable and trial seeding
independent of trial count.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z + _GAMMA).astype(np.uint64)
        z ^= z >> np.uint64(30)
        z *= _M1
        z ^= z >> np.uint64(27)
        z *= _M2
        z ^= z >> np.uint64(31)
    return z


def hashed_u64(seed: int, ids, counters, salt: int) -> np.ndarray:
    """Stateless 64-bit hash of (seed, id, counter, salt)."""
    ids = np.asarray(ids, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + np.uint64(salt) * _GAMMA
    h = _mix(base)
    h = _mix(h ^ ids)
    h = _mix(h ^ counters)
    return h


def hashed_uniform(seed: int, ids, counters, salt: int) -> np.ndarray:
    """Uniform floats in the open interval (0, 1)."""
    h = hashed_u64(seed, ids, counters, salt)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def hashed_normal(seed: int, ids, counters, salt: int) -> np.ndarray:
    """Standard normals via Box-Muller on two hashed uniforms."""
    u1 = hashed_uniform(seed, ids, counters, salt)
    u2 = hashed_uniform(seed, ids, counters, salt + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def derive_seed(master_seed: int, index: int) -> int:
    """Documented sub-seed hash: trial/stream `index` under `master_seed`."""
    with np.errstate(over="ignore"):
        key = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) ^ (np.uint64(index) * _M1)
    return int(_mix(key))
