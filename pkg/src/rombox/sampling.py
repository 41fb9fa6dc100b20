"""Low-discrepancy sampling and reproducible seed management.

Campaign stages must be replayable bit-for-bit, so every random draw in
the toolkit flows from one master seed fanned out by stage label
(:func:`derive_seed`), and design-of-experiments points come from a
Halton sequence whose offset is itself seed-derived.
"""

import hashlib

import numpy as np

__all__ = ["halton", "sample_box", "derive_seed"]

_PRIMES = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
    53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113,
]


def derive_seed(master_seed, label):
    """Stable 63-bit seed for a named stage of a seeded run."""
    digest = hashlib.sha256(f"{int(master_seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _radical_inverse(index, base):
    f, r = 1.0, 0.0
    while index > 0:
        index, digit = divmod(index, base)
        f /= base
        r += f * digit
    return r


def halton(n, dim, seed=0):
    """First ``n`` points of a seed-offset Halton sequence in [0, 1)^dim.

    The seed selects a deterministic offset into the sequence (index 0,
    which is all zeros, is always skipped), so different seeds give
    different but equally well-spread designs.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if not 1 <= dim <= len(_PRIMES):
        raise ValueError(f"dimension must be in [1, {len(_PRIMES)}]")
    offset = 1 + (derive_seed(seed, "halton-offset") % 100_000 if seed else 0)
    pts = np.empty((n, dim))
    for d in range(dim):
        base = _PRIMES[d]
        pts[:, d] = [_radical_inverse(offset + k, base) for k in range(n)]
    return pts


def sample_box(lower, upper, n, seed=0):
    """Halton design mapped onto the box [lower, upper], one row per point."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("lower/upper must be 1-d arrays of equal length")
    if np.any(lower >= upper):
        raise ValueError("box must satisfy lower < upper componentwise")
    unit = halton(n, len(lower), seed=seed)
    return lower + unit * (upper - lower)
