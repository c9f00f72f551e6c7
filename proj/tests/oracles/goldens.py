"""Independent reference values frozen into the C++ tests.

Run with: python3 tests/oracles/goldens.py
"""
import numpy as np
from scipy import ndimage


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def valid(m: np.ndarray) -> bool:
    filled = m != 0
    if not filled.any():
        return False
    _, n = ndimage.label(filled)  # default structure is 4-connectivity
    return n == 1 and bool(((m == 3) | (m == 4)).any())


def valid_fraction(n: int, seed: int = 12345) -> float:
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n):
        hits += valid(rng.integers(0, 5, size=(5, 5)))
    return hits / n


def pairing_rule(rewards):
    """All pairs the rank-offset rule can emit when the target exceeds supply."""
    order = sorted(range(len(rewards)), key=lambda i: -rewards[i])
    pairs = []
    k = 1
    while k < len(rewards):
        for i in range(len(rewards) - k):
            hi, lo = order[i], order[i + k]
            if rewards[hi] != rewards[lo]:
                pairs.append((rewards[hi], rewards[lo]))
        k *= 2
    return sorted(pairs)


if __name__ == "__main__":
    print("fnv all-soft:", hex(fnv1a64(bytes([2] * 25))))
    print("fnv all-empty:", hex(fnv1a64(bytes([0] * 25))))
    print("pairs for 6 rewards:", pairing_rule([6.0, 5.0, 4.0, 3.0, 2.0, 1.0]))
    n = 1_000_000
    p = valid_fraction(n)
    print(f"valid fraction over {n} uniform matrices: {p:.6f} (sd {np.sqrt(p * (1 - p) / n):.6f})")
