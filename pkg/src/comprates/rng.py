"""Seed handling: every random operation is a pure function of a 64-bit seed."""
import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(master_seed: int, index: int) -> int:
    """Child seed number ``index`` of ``master_seed``."""
    master_seed = check_seed(master_seed)
    return splitmix64((master_seed + (index + 1) * _GOLDEN) & MASK64)


def make_generator(seed: int) -> np.random.Generator:
    # Philox is counter-based, so streams for distinct keys do not overlap.
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))
