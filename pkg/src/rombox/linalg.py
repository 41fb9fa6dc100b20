"""Dense linear-algebra primitives with deterministic conventions.

Everything downstream (snapshot decompositions, gradient covariances,
lattice solves) funnels through these four operations.  They wrap LAPACK
via numpy but pin down the details LAPACK leaves open: ordering of
eigenvalues, signs of eigenvectors and singular vectors, and truncation
rules.  Identical input bits always produce identical output bits.

Rank specifications are shared across the toolkit: an ``int`` requests a
fixed number of modes, a ``float`` in (0, 1] requests the smallest count
whose squared singular values reach that fraction of the total energy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericsError

__all__ = [
    "SvdResult",
    "SymEigResult",
    "truncated_svd",
    "resolve_rank",
    "sym_eig",
    "pseudo_inverse",
    "general_eig",
]


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition ``m ~ u @ diag(sigma) @ v.T``.

    ``u`` and ``v`` hold the retained left/right singular vectors as
    columns; ``sigma`` is non-increasing and nonnegative.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank: int


@dataclass(frozen=True)
class SymEigResult:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _fix_column_signs(u):
    """Flip column signs so each column's largest-magnitude entry is >= 0.

    Ties break to the lowest row index (np.argmax convention).  Returns the
    per-column sign factors applied.
    """
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[idx, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    u *= signs
    return signs


def resolve_rank(sigma, rank_spec, limit=None):
    """Turn a rank specification into a retained mode count.

    ``rank_spec``: int -> that many modes (must lie in [1, limit]);
    float in (0, 1] -> smallest k with sum(sigma[:k]**2) / sum(sigma**2)
    >= rank_spec.  ``limit`` defaults to len(sigma).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = len(sigma) if limit is None else int(limit)
    if isinstance(rank_spec, (bool, np.bool_)):
        raise ValueError("rank_spec must be an int count or a float energy threshold")
    if isinstance(rank_spec, (int, np.integer)):
        r = int(rank_spec)
        if not 1 <= r <= n:
            raise ValueError(f"fixed rank {r} outside valid range [1, {n}]")
        return r
    eps = float(rank_spec)
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"energy threshold {eps} outside (0, 1]")
    energy = sigma[:n] ** 2
    total = energy.sum()
    if total == 0.0:
        return 1
    ratio = np.cumsum(energy) / total
    return int(np.searchsorted(ratio, eps - 1e-14) + 1)


def truncated_svd(m, rank_spec) -> SvdResult:
    """Best low-rank factorization of ``m`` by truncated SVD.

    Column signs follow the deterministic convention of
    :func:`sym_eig`; the corresponding right singular vectors are flipped
    in lockstep so the reconstruction is unchanged.
    """
    m = _as_matrix(m)
    u, sigma, vt = np.linalg.svd(m, full_matrices=False)
    k = resolve_rank(sigma, rank_spec, limit=min(m.shape))
    u, sigma, v = u[:, :k].copy(), sigma[:k].copy(), vt[:k].T.copy()
    signs = _fix_column_signs(u)
    v *= signs
    return SvdResult(u=u, sigma=sigma, v=v, rank=k)


def sym_eig(c) -> SymEigResult:
    """Eigendecomposition of a (nearly) symmetric real matrix.

    The input is symmetrized as (C + C.T)/2 first, which absorbs the
    round-off asymmetry of Monte-Carlo covariance estimates.  Eigenvalues
    come back in descending order; each eigenvector is sign-fixed so its
    largest-magnitude entry is nonnegative.
    """
    c = _as_matrix(c)
    if c.shape[0] != c.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {c.shape}")
    c = 0.5 * (c + c.T)
    evals, evecs = np.linalg.eigh(c)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order].copy()
    evecs = evecs[:, order].copy()
    _fix_column_signs(evecs)
    return SymEigResult(eigenvalues=evals, eigenvectors=evecs)


def pseudo_inverse(m, cutoff=1e-12):
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff.

    Singular values below ``cutoff * sigma_max`` are treated as exact
    zeros, which keeps rank-deficient snapshot matrices from blowing up.
    """
    m = _as_matrix(m)
    return np.linalg.pinv(m, rcond=cutoff)


def general_eig(a):
    """Eigendecomposition of a general real square matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted by
    non-increasing magnitude (ties: non-increasing real part, then
    non-increasing imaginary part, so a conjugate pair lists the
    +imaginary member first).  Each eigenvector has unit 2-norm and is
    phase-rotated so its first nonzero component is real and positive.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    try:
        evals, evecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.lexsort((-evals.imag, -evals.real, -np.abs(evals)))
    evals = evals[order]
    evecs = evecs[:, order]
    normed = np.empty_like(evecs)
    for j in range(evecs.shape[1]):
        v = evecs[:, j]
        v = v / np.linalg.norm(v)
        mags = np.abs(v)
        nz = np.nonzero(mags > 1e-12 * mags.max())[0]
        if len(nz):
            pivot = v[nz[0]]
            v = v * (pivot.conjugate() / abs(pivot))
        normed[:, j] = v
    return evals, normed
