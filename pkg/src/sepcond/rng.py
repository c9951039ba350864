"""SplitMix64 stream, vectorized.

Output n (counting from 1) is mix(seed + n * GAMMA mod 2^64), so any slice of
the stream can be produced directly without stepping through the earlier
outputs. Uniform doubles use the top 53 bits: (z >> 11) * 2^-53.
"""
import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


def splitmix64_next(state):
    """Scalar reference step: returns (new_state, output)."""
    state = (state + GAMMA) & MASK
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return state, z ^ (z >> 31)


def splitmix64(seed, count, start=0):
    """Outputs start+1 .. start+count of the stream seeded with ``seed``."""
    seed = int(seed) & MASK
    n = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + n * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniforms(seed, count, start=0):
    """Doubles in [0, 1) from the stream."""
    bits = splitmix64(seed, count, start) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / (1 << 53))
