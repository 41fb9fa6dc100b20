"""Proper orthogonal decomposition with coefficient interpolation.

The snapshot matrix (one full-order output per column) is factored by
SVD; the leading left singular vectors span the reduced output space and
the reduced snapshots are their coefficients, X_pod = U_N^T X.  A new
parameter value is handled entirely in coefficient space: interpolate
the reduced snapshots, then map back up with U_N.  Nothing about the
solver that produced the snapshots is needed, which is the point.

Coefficient interpolation is piecewise cubic for a scalar parameter and
thin-plate-spline RBF (with an appended linear polynomial) for vector
parameters; both reproduce the training coefficients exactly.
"""

import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import cdist

from .linalg import _fix_column_signs, pseudo_inverse, resolve_rank

__all__ = [
    "ParametricSnapshotSet",
    "PODIModel",
    "build",
    "evaluate",
    "decay_report",
    "save_snapshot_set",
    "load_snapshot_set",
    "save_decay_csv",
]


@dataclass(frozen=True)
class ParametricSnapshotSet:
    """Training data: ``parameters`` (N_s, d) rows paired with snapshot columns.

    ``snapshots`` is dof-count x N_s; parameters must be pairwise
    distinct (minimum distance 1e-12) or the interpolation system is
    singular.
    """

    parameters: np.ndarray
    snapshots: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.parameters, dtype=float)
        if params.ndim == 1:
            params = params[:, None]
        snaps = np.asarray(self.snapshots, dtype=float)
        if snaps.ndim != 2:
            raise ValueError("snapshots must be a 2-d matrix, one column per sample")
        if snaps.shape[1] != len(params):
            raise ValueError(
                f"{snaps.shape[1]} snapshot columns vs {len(params)} parameters"
            )
        if not (np.all(np.isfinite(params)) and np.all(np.isfinite(snaps))):
            raise ValueError("snapshot set contains non-finite entries")
        if len(params) >= 2:
            d = cdist(params, params)
            np.fill_diagonal(d, np.inf)
            if d.min() <= 1e-12:
                raise ValueError("parameters must be pairwise distinct")
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "snapshots", snaps)

    @property
    def n_samples(self):
        return self.snapshots.shape[1]

    @property
    def dof_count(self):
        return self.snapshots.shape[0]

    @property
    def param_dim(self):
        return self.parameters.shape[1]


class _CubicCoefficients:
    """Vector-valued piecewise-cubic interpolation over a scalar parameter."""

    name = "cubic"

    def __init__(self, params, coeffs):
        x = params[:, 0]
        order = np.argsort(x, kind="stable")
        self._spline = CubicSpline(x[order], coeffs[:, order].T, axis=0)

    def __call__(self, mu):
        return self._spline(float(mu[0]))


class _ThinPlateCoefficients:
    """Thin-plate-spline RBF with a linear tail, solved via pseudo-inverse.

    The pseudo-inverse cutoff keeps near-duplicate parameter clusters
    from making the system explode.
    """

    name = "rbf"

    def __init__(self, params, coeffs):
        n, d = params.shape
        self._centers = params
        k = self._kernel(cdist(params, params))
        poly = np.column_stack([np.ones(n), params])
        system = np.block(
            [[k, poly], [poly.T, np.zeros((d + 1, d + 1))]]
        )
        rhs = np.vstack([coeffs.T, np.zeros((d + 1, coeffs.shape[0]))])
        self._weights = pseudo_inverse(system) @ rhs

    @staticmethod
    def _kernel(r):
        out = np.zeros_like(r)
        mask = r > 0
        out[mask] = r[mask] ** 2 * np.log(r[mask])
        return out

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float).reshape(1, -1)
        k = self._kernel(cdist(mu, self._centers))[0]
        tail = np.concatenate([[1.0], mu[0]])
        return np.concatenate([k, tail]) @ self._weights


@dataclass(frozen=True)
class PODIModel:
    """POD basis, reduced training coefficients, and their interpolator."""

    basis: np.ndarray
    singular_values: np.ndarray
    coefficients: np.ndarray
    interpolator: object
    parameters: np.ndarray
    param_lo: np.ndarray
    param_hi: np.ndarray

    @property
    def n_modes(self):
        return self.basis.shape[1]

    @property
    def param_dim(self):
        return self.parameters.shape[1]


def build(snapshot_set: ParametricSnapshotSet, rank_spec, scheme="auto") -> PODIModel:
    """Fit the POD basis and the coefficient interpolator.

    The full singular-value spectrum is retained for decay reporting
    regardless of how many modes the ``rank_spec`` keeps.  ``scheme`` is
    "cubic" (scalar parameters only), "rbf", or "auto" (cubic when d == 1).
    """
    if snapshot_set.n_samples < 2:
        raise ValueError("need at least two snapshots")
    x = snapshot_set.snapshots
    u, sigma, _ = np.linalg.svd(x, full_matrices=False)
    n_modes = resolve_rank(sigma, rank_spec, limit=min(x.shape))
    basis = u[:, :n_modes].copy()
    _fix_column_signs(basis)
    coeffs = basis.T @ x
    params = snapshot_set.parameters
    if scheme == "auto":
        scheme = "cubic" if snapshot_set.param_dim == 1 else "rbf"
    if scheme == "cubic":
        if snapshot_set.param_dim != 1:
            raise ValueError("cubic interpolation needs a scalar parameter")
        interp = _CubicCoefficients(params, coeffs)
    elif scheme == "rbf":
        interp = _ThinPlateCoefficients(params, coeffs)
    else:
        raise ValueError(f"unknown interpolation scheme '{scheme}'")
    return PODIModel(
        basis=basis,
        singular_values=sigma,
        coefficients=coeffs,
        interpolator=interp,
        parameters=params,
        param_lo=params.min(axis=0),
        param_hi=params.max(axis=0),
    )


def evaluate(model: PODIModel, mu):
    """Approximate the full-order output at ``mu``.

    Queries outside the training bounding box are clamped to it with a
    warning (optimization drivers probe boundaries).
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if len(mu) != model.param_dim:
        raise ValueError(f"expected {model.param_dim} parameters, got {len(mu)}")
    clamped = np.clip(mu, model.param_lo, model.param_hi)
    if not np.array_equal(clamped, mu):
        warnings.warn(
            f"parameter {mu} outside the training box; clamped to {clamped}",
            RuntimeWarning,
            stacklevel=2,
        )
    return model.basis @ model.interpolator(clamped)


def decay_report(model: PODIModel):
    """Normalized singular values [(1, 1.0), (2, s2/s1), ...]."""
    sigma = model.singular_values
    top = sigma[0] if sigma[0] > 0 else 1.0
    return [(i + 1, float(s / top)) for i, s in enumerate(sigma)]


def save_decay_csv(model: PODIModel, path):
    rows = decay_report(model)
    with open(path, "w") as fh:
        fh.write("# schema: rombox/decay-v1\n")
        fh.write("index,sigma,sigma_normalized\n")
        for (i, ratio), sigma in zip(rows, model.singular_values):
            fh.write(f"{i},{float(sigma)!r},{ratio!r}\n")


def save_snapshot_set(snapshot_set: ParametricSnapshotSet, directory):
    """Persist as per-sample field CSVs plus a manifest CSV.

    Layout: ``directory/fields/sample_<id>.csv`` (one dof value per
    line) and ``directory/manifest.csv`` mapping id -> parameter vector
    and relative file path.  Returns the manifest path.
    """
    directory = str(directory)
    fields_dir = os.path.join(directory, "fields")
    os.makedirs(fields_dir, exist_ok=True)
    d = snapshot_set.param_dim
    manifest = os.path.join(directory, "manifest.csv")
    with open(manifest, "w") as fh:
        fh.write("# schema: rombox/manifest-v1\n")
        fh.write("id," + ",".join(f"mu_{j}" for j in range(d)) + ",path\n")
        for i in range(snapshot_set.n_samples):
            rel = os.path.join("fields", f"sample_{i:05d}.csv")
            with open(os.path.join(directory, rel), "w") as field_fh:
                for value in snapshot_set.snapshots[:, i]:
                    field_fh.write(f"{float(value)!r}\n")
            mu_txt = ",".join(repr(float(v)) for v in snapshot_set.parameters[i])
            fh.write(f"{i},{mu_txt},{rel}\n")
    return manifest


def load_snapshot_set(manifest_path) -> ParametricSnapshotSet:
    """Inverse of :func:`save_snapshot_set`."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    params = []
    columns = []
    with open(manifest_path) as fh:
        header = None
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if header[0] != "id" or header[-1] != "path":
                    raise ValueError(f"{manifest_path}: unrecognized manifest header")
                continue
            parts = line.split(",")
            params.append([float(v) for v in parts[1:-1]])
            field_path = os.path.join(base, parts[-1])
            columns.append(np.loadtxt(field_path, ndmin=1))
    if not columns:
        raise ValueError(f"{manifest_path}: empty manifest")
    return ParametricSnapshotSet(
        parameters=np.array(params), snapshots=np.stack(columns, axis=1)
    )
