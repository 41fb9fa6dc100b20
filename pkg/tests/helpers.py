"""Shared synthetic series and generators used across the test modules."""

import numpy as np
from scipy.linalg import block_diag

from rombox.dmd import SnapshotSeries


def geometric_pair_series(n_samples=5):
    """x_k = (2^k, 3^k): generated by the diagonal propagator diag(2, 3)."""
    k = np.arange(n_samples)
    return SnapshotSeries(data=np.stack([2.0**k, 3.0**k]), dt=1.0, t0=0.0)


def rotation_series(theta=0.1, n_samples=20):
    """Trajectory of the plane rotation by ``theta`` starting at (1, 0)."""
    k = np.arange(n_samples)
    return SnapshotSeries(
        data=np.stack([np.cos(theta * k), np.sin(theta * k)]), dt=1.0, t0=0.0
    )


def damped_oscillation_series(n_samples=30, limit=5.0, decay=0.9, freq=0.5):
    """3-state linear trajectory whose first component is limit + decay^k cos(freq k).

    The second component carries the quadrature term and the third the
    constant mode, so the trajectory matrix has full rank 3 and DMD can
    recover the spectrum {1, decay e^{+-i freq}} exactly.
    """
    k = np.arange(n_samples)
    data = np.stack(
        [
            limit + decay**k * np.cos(freq * k),
            decay**k * np.sin(freq * k),
            np.full(n_samples, limit),
        ]
    )
    return SnapshotSeries(data=data, dt=1.0, t0=0.0)


def random_linear_system(rng, n_max=6, radius=1.05, min_gap=0.05):
    """Random real matrix with distinct, well-separated eigenvalues.

    Returns ``(A, eigenvalues)``.  Built from 1x1 and 2x2 real blocks
    conjugated by a random orthogonal matrix, so conditioning stays
    benign and the spectrum is known exactly.
    """
    while True:
        n = int(rng.integers(2, n_max + 1))
        evs = []
        while len(evs) < n:
            if n - len(evs) >= 2 and rng.random() < 0.5:
                r = rng.uniform(0.3, radius)
                th = rng.uniform(0.1, np.pi - 0.1)
                evs += [r * np.exp(1j * th), r * np.exp(-1j * th)]
            else:
                evs.append(complex(rng.uniform(-radius, radius), 0.0))
        evs = np.array(evs[:n])
        sep = np.abs(np.subtract.outer(evs, evs)) + np.eye(n)
        if sep.min() < min_gap:
            continue
        blocks = []
        i = 0
        while i < n:
            if abs(evs[i].imag) > 1e-12:
                re, im = evs[i].real, abs(evs[i].imag)
                blocks.append(np.array([[re, im], [-im, re]]))
                i += 2
            else:
                blocks.append(np.array([[evs[i].real]]))
                i += 1
        q = np.linalg.qr(rng.standard_normal((n, n)))[0]
        a = q @ block_diag(*blocks) @ q.T
        return a, evs


def trajectory(a, x0, n_samples, dt=1.0):
    """Snapshot series x_{k+1} = A x_k."""
    n = len(x0)
    data = np.empty((n, n_samples))
    data[:, 0] = x0
    for k in range(1, n_samples):
        data[:, k] = a @ data[:, k - 1]
    return SnapshotSeries(data=data, dt=dt, t0=0.0)


def match_eigenvalues(found, true):
    """Greedy nearest matching; returns max relative error over pairs."""
    rem = list(true)
    worst = 0.0
    for lam in found:
        j = int(np.argmin([abs(lam - t) for t in rem]))
        worst = max(worst, abs(lam - rem[j]) / max(abs(rem[j]), 1e-300))
        rem.pop(j)
    return worst
