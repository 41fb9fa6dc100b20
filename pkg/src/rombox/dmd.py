"""Dynamic mode decomposition of equispaced-in-time snapshot sequences.

Given snapshots x_1..x_m, the best-fit linear propagator A with
Y ~ A X is never formed explicitly.  Instead the truncated SVD
X ~ U_r S_r V_r^T yields the r x r reduced operator

    A_r = U_r^T Y V_r S_r^-1

whose eigenpairs give the temporal spectrum.  Modes come in two flavors:
"exact" (Y V_r S_r^-1 W) and "projected" (U_r W).  Amplitudes are fitted
against the first snapshot by least squares, and forecasting raises the
eigenvalues to real powers through the principal logarithm.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericsError
from .linalg import general_eig, resolve_rank

__all__ = [
    "SnapshotSeries",
    "DMDModel",
    "RegimeEstimate",
    "split_snapshots",
    "fit",
    "predict",
    "reconstruct",
    "regime_value",
    "load_snapshots_csv",
    "save_snapshots_csv",
    "save_eigenvalues_csv",
]

# requested ranks silently shrink to the numerical rank of X at this cutoff,
# keeping S_r^-1 bounded
_RANK_CUTOFF = 1e-12

# |lambda| beyond 1 + this is flagged as a diverging mode
_DIVERGENCE_TOL = 1e-6


@dataclass(frozen=True)
class SnapshotSeries:
    """State snapshots as columns of ``data`` (n x m), sampled every ``dt``."""

    data: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] < 2:
            raise ValueError("need a 2-d array with at least two time samples")
        if not np.all(np.isfinite(data)):
            raise ValueError("snapshots must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n_states(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def t_end(self):
        return self.t0 + (self.n_samples - 1) * self.dt


@dataclass(frozen=True)
class DMDModel:
    """Fitted decomposition; immutable and safe to share across threads.

    ``fit_residual`` is the largest 2-norm reconstruction error over the
    training snapshots, recorded at fit time.
    """

    rank: int
    basis: np.ndarray
    reduced_operator: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    dt: float
    t0: float
    n_samples: int
    fit_residual: float
    mode_kind: str

    @property
    def t_end(self):
        return self.t0 + (self.n_samples - 1) * self.dt


@dataclass(frozen=True)
class RegimeEstimate:
    """Long-horizon mean state with a max-min spread as convergence hint."""

    value: np.ndarray
    spread: np.ndarray
    diverging: bool


def split_snapshots(series: SnapshotSeries):
    """Shifted snapshot pair: X = columns 1..m-1, Y = columns 2..m."""
    return series.data[:, :-1], series.data[:, 1:]


def fit(series: SnapshotSeries, rank_spec, mode_kind="exact") -> DMDModel:
    """Fit a DMD model; the full n x n propagator is never materialized.

    ``rank_spec`` follows the shared convention (int count or float
    energy in (0, 1]); the count is additionally capped at the numerical
    rank of X.  ``mode_kind`` selects "exact" or "projected" modes.
    """
    if mode_kind not in ("exact", "projected"):
        raise ValueError(f"unknown mode_kind '{mode_kind}'")
    x, y = split_snapshots(series)
    u_full, sigma_full, vt_full = np.linalg.svd(x, full_matrices=False)
    if sigma_full[0] == 0.0:
        raise ValueError("zero snapshot matrix: nothing to decompose")
    requested = resolve_rank(sigma_full, rank_spec, limit=min(x.shape))
    numerical = int(np.sum(sigma_full > _RANK_CUTOFF * sigma_full[0]))
    r = min(requested, numerical)
    u = u_full[:, :r]
    sigma = sigma_full[:r]
    v = vt_full[:r].T
    atilde = u.T @ y @ v / sigma  # right-multiplication by S_r^-1
    evals, w = general_eig(atilde)
    if mode_kind == "exact":
        modes = (y @ v / sigma) @ w
    else:
        modes = u.astype(complex) @ w
    x1 = series.data[:, 0].astype(complex)
    amplitudes = np.linalg.lstsq(modes, x1, rcond=None)[0]
    # record the worst training-time reconstruction error
    powers = np.arange(series.n_samples)
    dynamics = amplitudes[:, None] * evals[:, None] ** powers[None, :]
    recon = (modes @ dynamics).real
    fit_residual = float(np.max(np.linalg.norm(recon - series.data, axis=0)))
    return DMDModel(
        rank=r,
        basis=u,
        reduced_operator=atilde,
        eigenvalues=evals,
        eigenvectors=w,
        modes=modes,
        amplitudes=amplitudes,
        dt=series.dt,
        t0=series.t0,
        n_samples=series.n_samples,
        fit_residual=fit_residual,
        mode_kind=mode_kind,
    )


def reconstruct(model: DMDModel, t):
    """Complex state reconstruction at an arbitrary time.

    The eigenvalue power uses the principal branch of
    lambda^p = exp(p log lambda); zero eigenvalues only admit integer
    exponents.
    """
    p = (float(t) - model.t0) / model.dt
    lam = model.eigenvalues
    zero = np.abs(lam) == 0.0
    if np.any(zero):
        if abs(p - round(p)) > 1e-12:
            raise NumericsError(
                "zero eigenvalue raised to non-integer power: degenerate mode"
            )
        grown = np.zeros_like(lam)
        grown[~zero] = lam[~zero] ** round(p)
        if round(p) == 0:
            grown[zero] = 1.0
    else:
        grown = lam**p
    return model.modes @ (grown * model.amplitudes)


def predict(model: DMDModel, t):
    """Real part of the reconstruction at time ``t`` (forecasting allowed)."""
    return reconstruct(model, t).real


def regime_value(model: DMDModel, horizon, window=8) -> RegimeEstimate:
    """Average the forecast over ``window`` equispaced times ending at ``horizon``.

    The spread (max - min per component) indicates whether transients
    have died out.  Growing modes with non-negligible amplitude flag the
    estimate as diverging (a warning, not an error).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if not horizon > model.t_end:
        raise ValueError(
            f"horizon {horizon} must exceed the training window end {model.t_end}"
        )
    amp_scale = np.max(np.abs(model.amplitudes)) if len(model.amplitudes) else 0.0
    active = np.abs(model.amplitudes) > 1e-12 * max(amp_scale, 1.0)
    diverging = bool(
        np.any(np.abs(model.eigenvalues[active]) > 1.0 + _DIVERGENCE_TOL)
    )
    if diverging:
        warnings.warn(
            "regime estimate requested from a model with growing modes",
            RuntimeWarning,
            stacklevel=2,
        )
    times = horizon - model.dt * np.arange(window)[::-1]
    states = np.stack([predict(model, t) for t in times], axis=1)
    value = states.mean(axis=1)
    spread = states.max(axis=1) - states.min(axis=1)
    return RegimeEstimate(value=value, spread=spread, diverging=diverging)


def load_snapshots_csv(path, dt, t0=0.0) -> SnapshotSeries:
    """Read a snapshot matrix: one row per state dimension, one column per time."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return SnapshotSeries(data=data, dt=dt, t0=t0)


def save_snapshots_csv(data, path):
    np.savetxt(path, np.atleast_2d(data), delimiter=",")


def save_eigenvalues_csv(model: DMDModel, path):
    """Eigenvalue table: re, im, magnitude per retained mode."""
    with open(path, "w") as fh:
        fh.write("re,im,magnitude\n")
        for lam in model.eigenvalues:
            fh.write(f"{float(lam.real)!r},{float(lam.imag)!r},{float(abs(lam))!r}\n")
