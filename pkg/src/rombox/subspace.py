"""Active-subspace discovery for a scalar objective over a box domain.

The uncentered covariance of the objective's gradient,
C = E[grad f grad f^T] under a uniform density on the box, is estimated
by Monte Carlo from gradient samples.  Its dominant eigenvectors W1 span
the directions along which f varies most on average; projecting
parameters onto them gives the active variable y = W1^T mu.

All computations happen in normalized coordinates: the box maps
bijectively onto [-1, 1]^P and gradients are rescaled accordingly, so
eigenvectors are comparable across dimensions.  De-normalization happens
only at the oracle boundary.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .linalg import sym_eig
from .sampling import derive_seed, halton

__all__ = [
    "ParameterBox",
    "GradientSample",
    "ActiveSubspace",
    "ActiveSamples",
    "RidgeSurrogate",
    "estimate_covariance",
    "fit_subspace",
    "project",
    "estimate_gradients",
    "active_range",
    "sample_active",
    "surrogate_g",
]


@dataclass(frozen=True)
class ParameterBox:
    """Axis-aligned parameter domain with a uniform sampling density."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape or len(lower) == 0:
            raise ValueError("lower/upper must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("need lower < upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return len(self.lower)

    def normalize(self, mu):
        """Physical coordinates -> [-1, 1]^P."""
        mu = np.asarray(mu, dtype=float)
        return 2.0 * (mu - self.lower) / (self.upper - self.lower) - 1.0

    def denormalize(self, z):
        """[-1, 1]^P -> physical coordinates."""
        z = np.asarray(z, dtype=float)
        return self.lower + 0.5 * (z + 1.0) * (self.upper - self.lower)

    def gradient_scale(self):
        """Chain-rule factors turning df/dmu into df/dz."""
        return 0.5 * (self.upper - self.lower)

    def contains(self, mu, tol=0.0):
        mu = np.asarray(mu, dtype=float)
        return bool(np.all(mu >= self.lower - tol) and np.all(mu <= self.upper + tol))


@dataclass(frozen=True)
class GradientSample:
    """One (parameter, gradient, value) triple in normalized coordinates."""

    mu: np.ndarray
    grad: np.ndarray
    value: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        grad = np.asarray(self.grad, dtype=float).reshape(-1)
        if mu.shape != grad.shape:
            raise ValueError("parameter and gradient dimensions differ")
        if not (
            np.all(np.isfinite(mu))
            and np.all(np.isfinite(grad))
            and np.isfinite(self.value)
        ):
            raise ValueError("gradient sample contains non-finite entries")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class ActiveSubspace:
    """Eigenpairs of the gradient covariance split at the active dimension."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    active_dim: int

    @property
    def w1(self):
        return self.eigenvectors[:, : self.active_dim]

    @property
    def w2(self):
        return self.eigenvectors[:, self.active_dim :]

    @property
    def dim(self):
        return self.eigenvectors.shape[0]


def estimate_covariance(samples):
    """Monte-Carlo estimate (1/K) sum grad grad^T, symmetrized.

    Warns when fewer samples than dimensions are supplied.
    """
    if not samples:
        raise ValueError("no gradient samples")
    dim = len(samples[0].grad)
    if any(len(s.grad) != dim for s in samples):
        raise ValueError("gradient samples have mixed dimensions")
    if len(samples) < dim:
        warnings.warn(
            f"covariance from {len(samples)} samples in {dim} dimensions "
            "is rank-deficient",
            RuntimeWarning,
            stacklevel=2,
        )
    grads = np.stack([s.grad for s in samples])
    c = grads.T @ grads / len(samples)
    return 0.5 * (c + c.T)


def fit_subspace(c, dim_spec) -> ActiveSubspace:
    """Eigendecompose the gradient covariance and split off the active block.

    ``dim_spec`` is a fixed dimension M or "gap", which picks M at the
    largest relative spectral gap (ties to the smallest M).  The gap
    rule refuses flat spectra; pass a fixed M for those.
    """
    res = sym_eig(c)
    evals = res.eigenvalues.copy()
    p = len(evals)
    scale = max(1.0, float(evals[0]) if evals[0] > 0 else 1.0)
    if evals[-1] < -1e-10 * scale:
        raise ValueError(
            f"covariance is not positive semidefinite (min eigenvalue {evals[-1]})"
        )
    np.clip(evals, 0.0, None, out=evals)
    if dim_spec == "gap":
        if p == 1:
            m = 1
        else:
            lam1 = evals[0]
            if lam1 <= 0.0:
                raise ValueError("gap rule undefined for a zero spectrum; fix M")
            gaps = (evals[:-1] - evals[1:]) / lam1
            if gaps.max() <= 1e-12:
                raise ValueError(
                    "flat spectrum: the gap rule degenerates, pass a fixed M"
                )
            m = int(np.argmax(gaps)) + 1
    else:
        m = int(dim_spec)
        if not 1 <= m <= p:
            raise ValueError(f"active dimension {m} outside [1, {p}]")
    return ActiveSubspace(eigenvalues=evals, eigenvectors=res.eigenvectors, active_dim=m)


def project(subspace: ActiveSubspace, mu):
    """Active variable y = W1^T mu for one point or a batch of rows."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != subspace.dim:
        raise ValueError(f"expected dimension {subspace.dim}, got {mu.shape[-1]}")
    return mu @ subspace.w1


def estimate_gradients(
    oracle, mus, scheme="central-fd", h=1e-4, n_neighbors=None, values=None
):
    """Gradient samples of the oracle objective at normalized points ``mus``.

    Schemes: "analytic" queries the oracle's own gradient; "central-fd"
    uses central differences with step ``h`` in normalized coordinates
    (2P extra evaluations per point, points must keep margin >= h from
    the box faces); "local-linear" fits a least-squares linear model to
    the ``n_neighbors`` nearest sampled values (default 2P+1) and uses
    its slope, mirroring gradient recovery from an existing value ledger.

    ``values`` optionally supplies precomputed objective values at
    ``mus`` (skipping those oracle calls).
    """
    box = oracle.box
    mus = np.atleast_2d(np.asarray(mus, dtype=float))
    n, p = mus.shape
    if p != box.dim:
        raise ValueError(f"points have dimension {p}, box has {box.dim}")

    def value_at(z):
        return float(oracle.value(box.denormalize(z)))

    if values is None:
        values = np.array([value_at(z) for z in mus])
    else:
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != n:
            raise ValueError("values length does not match points")

    samples = []
    if scheme == "analytic":
        scale = box.gradient_scale()
        for z, f in zip(mus, values):
            grad = np.asarray(oracle.gradient(box.denormalize(z)), dtype=float)
            samples.append(GradientSample(mu=z, grad=grad * scale, value=f))
    elif scheme == "central-fd":
        for z, f in zip(mus, values):
            if np.any(np.abs(z) > 1.0 - h):
                raise ValueError(
                    f"point {z} too close to the boundary for a central "
                    f"stencil with h={h}"
                )
            grad = np.empty(p)
            for i in range(p):
                step = np.zeros(p)
                step[i] = h
                grad[i] = (value_at(z + step) - value_at(z - step)) / (2.0 * h)
            samples.append(GradientSample(mu=z, grad=grad, value=f))
    elif scheme == "local-linear":
        k = min(n_neighbors or (2 * p + 1), n)
        if k < p + 1:
            warnings.warn(
                f"{k} neighbors cannot determine a {p}-dimensional slope",
                RuntimeWarning,
                stacklevel=2,
            )
        for z, f in zip(mus, values):
            dist = np.linalg.norm(mus - z, axis=1)
            nearest = np.argsort(dist, kind="stable")[:k]
            design = np.column_stack([np.ones(k), mus[nearest] - z])
            coef = np.linalg.lstsq(design, values[nearest], rcond=None)[0]
            samples.append(GradientSample(mu=z, grad=coef[1:], value=f))
    else:
        raise ValueError(f"unknown gradient scheme '{scheme}'")
    return samples


def active_range(subspace: ActiveSubspace, n_probe=4096, seed=0):
    """Per-active-direction extremes of y = W1^T z over z in [-1, 1]^P.

    Exact by corner analysis for M <= 3 (a linear functional is extreme
    at a corner whose signs match the weights); estimated from random
    probes with a warning for larger M.  Returns (low, high) arrays of
    length M.
    """
    w1 = subspace.w1
    m = subspace.active_dim
    if m <= 3:
        high = np.abs(w1).sum(axis=0)
        return -high, high
    warnings.warn(
        f"active dimension {m} > 3: range estimated from {n_probe} probes",
        RuntimeWarning,
        stacklevel=2,
    )
    rng = np.random.default_rng(derive_seed(seed, "active-range-probe"))
    probes = rng.uniform(-1.0, 1.0, size=(n_probe, subspace.dim)) @ w1
    return probes.min(axis=0), probes.max(axis=0)


@dataclass(frozen=True)
class ActiveSamples:
    """Stratified active-direction design: physical points plus diagnostics."""

    points: np.ndarray
    normalized: np.ndarray
    targets: np.ndarray
    fallback: np.ndarray


def _ray_clip_point(w, y):
    """The point clip(w * t) on the ray through w with w^T clip(w t) = y.

    Monotone in t, so bisection converges; this is the deterministic
    fallback representative when rejection sampling cannot hit y.
    """
    def projected(t):
        return float(w @ np.clip(w * t, -1.0, 1.0))

    lo, hi = 0.0, 1.0
    if y >= 0:
        while projected(hi) < y and hi < 1e9:
            hi *= 2.0
    else:
        lo, hi = -1.0, 0.0
        while projected(lo) > y and lo > -1e9:
            lo *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if projected(mid) < y:
            lo = mid
        else:
            hi = mid
    return np.clip(w * 0.5 * (lo + hi), -1.0, 1.0)


def sample_active(subspace: ActiveSubspace, box: ParameterBox, n, seed=0):
    """Draw ``n`` physical points whose active coordinates stratify the range.

    Targets are an endpoint-inclusive grid over the achievable range
    (Halton-stratified for M >= 2).  Each target's full-space
    representative comes from rejection sampling of the inactive
    complement; after 1000 rejections the deterministic ray-clip point
    is used instead and flagged.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if box.dim != subspace.dim:
        raise ValueError("box dimension does not match the subspace")
    m = subspace.active_dim
    w1 = subspace.w1
    low, high = active_range(subspace, seed=seed)
    if np.any(high - low <= 0):
        raise ValueError("active range is empty")
    if m == 1:
        if n == 1:
            targets = np.array([[0.5 * (low[0] + high[0])]])
        else:
            targets = np.linspace(low[0], high[0], n)[:, None]
    else:
        targets = low + halton(n, m, seed=derive_seed(seed, "active-strata")) * (
            high - low
        )
    rng = np.random.default_rng(derive_seed(seed, "active-inactive"))
    normalized = np.empty((n, subspace.dim))
    fallback = np.zeros(n, dtype=bool)
    for i, y in enumerate(targets):
        hit = False
        for _ in range(1000):
            u = rng.uniform(-1.0, 1.0, subspace.dim)
            z = u + w1 @ (y - w1.T @ u)
            if np.all(np.abs(z) <= 1.0):
                normalized[i] = z
                hit = True
                break
        if not hit:
            fallback[i] = True
            if m == 1:
                normalized[i] = _ray_clip_point(w1[:, 0], float(y[0]))
            else:
                normalized[i] = np.clip(w1 @ y, -1.0, 1.0)
    return ActiveSamples(
        points=box.denormalize(normalized),
        normalized=normalized,
        targets=targets,
        fallback=fallback,
    )


class RidgeSurrogate:
    """One-dimensional surrogate g(y) fitted over the active variable.

    Piecewise-cubic interpolation of (projected parameter, value) pairs
    with duplicate projections averaged; queries outside the training
    range are clamped to its endpoints.
    """

    def __init__(self, ys, values):
        ys = np.asarray(ys, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float).reshape(-1)
        order = np.argsort(ys, kind="stable")
        ys, values = ys[order], values[order]
        tol = 1e-12 * max(1.0, float(ys[-1] - ys[0]))
        merged_y, merged_f = [ys[0]], [values[0]]
        counts = [1]
        for y, f in zip(ys[1:], values[1:]):
            if y - merged_y[-1] <= tol:
                merged_f[-1] += f
                counts[-1] += 1
            else:
                merged_y.append(y)
                merged_f.append(f)
                counts.append(1)
        ys = np.array(merged_y)
        values = np.array(merged_f) / np.array(counts)
        if len(ys) < 4:
            raise ValueError(f"need at least 4 distinct projections, got {len(ys)}")
        self.y_min = float(ys[0])
        self.y_max = float(ys[-1])
        self._spline = CubicSpline(ys, values)

    def __call__(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.y_min, self.y_max)
        out = self._spline(y)
        return float(out) if out.ndim == 0 else out


def surrogate_g(subspace: ActiveSubspace, mus, values) -> RidgeSurrogate:
    """Fit g with f(mu) ~ g(W1^T mu) from normalized parameters and values."""
    if subspace.active_dim != 1:
        raise ValueError("the one-dimensional surrogate requires active_dim == 1")
    ys = project(subspace, np.atleast_2d(mus))[:, 0]
    return RidgeSurrogate(ys, values)
