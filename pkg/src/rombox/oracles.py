"""Synthetic full-order models for exercising the campaign end to end.

Each oracle stands in for an expensive solver but admits closed-form
truth, so every pipeline leg can be checked against an analytic answer:

* ``RidgeDragOracle`` -- a steady scalar objective with an exactly
  one-dimensional dominant direction plus a tunable leakage into the
  orthogonal complement, and a 1-d field whose weighted integral equals
  the objective.  Verifies the subspace discovery, the sampling
  comparison, and the surrogate optimization loop.
* ``HeatRegimeOracle`` -- a time-resolved linear relaxation whose
  long-time state is known in closed form.  Verifies the forecasting
  shortcut: fit the decomposition on a few early snapshots and read off
  the regime.
* ``GeoDemoOracle`` -- scores lattice-deformed meshes against a target
  shape, proving the parameters -> lattice -> mesh -> objective chain
  without any flow solver.

Oracles advertise capabilities simply by defining the method: ``value``
is mandatory; ``gradient``, ``field``, ``time_series`` and
``field_functional`` are optional.  All evaluations are deterministic.
"""

import numpy as np

from .ffd import FFDLattice, GeoParamMap, apply_parameters, deform_mesh
from .dmd import SnapshotSeries
from .mesh import TriMesh
from .subspace import ParameterBox

__all__ = [
    "RidgeDragOracle",
    "HeatRegimeOracle",
    "GeoDemoOracle",
    "make_oracle",
    "has_capability",
]


def has_capability(oracle, name):
    return callable(getattr(oracle, name, None))


def _orthonormal_profiles(grid, raw_columns):
    q, r = np.linalg.qr(np.stack(raw_columns, axis=1))
    # fix signs so the basis does not depend on LAPACK conventions
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return q


class RidgeDragOracle:
    """Steady drag stand-in f(mu) = h(a . mu) + leak * q(mu).

    ``a`` is a fixed unit vector, h(y) = y^3 + y is strictly monotone,
    and q varies only along two directions orthogonal to ``a`` so the
    gradient covariance has one dominant eigenvalue with a controlled
    tail.  The field output superposes seven fixed orthonormal spatial
    profiles; the functional weight vector is chosen so that
    ``field_functional(field(mu)) == value(mu)`` identically.
    """

    name = "ridge-drag"

    def __init__(self, leak=0.05, n_dof=2000):
        self.leak = float(leak)
        self.n_dof = int(n_dof)
        direction = np.array([1.0, 0.6, -0.4, 0.3, -0.2])
        self.direction = direction / np.linalg.norm(direction)
        p = len(direction)
        self.box = ParameterBox(lower=-np.ones(p), upper=np.ones(p))
        basis = np.linalg.qr(
            np.column_stack([self.direction, np.eye(p)[:, : p - 1]])
        )[0]
        self._b1 = basis[:, 1]
        self._b2 = basis[:, 2]
        grid = np.linspace(0.0, 1.0, self.n_dof)
        self.profiles = _orthonormal_profiles(
            grid,
            [
                np.exp(-0.5 * ((grid - 0.30) / 0.06) ** 2),
                np.exp(-0.5 * ((grid - 0.50) / 0.10) ** 2),
                np.exp(-0.5 * ((grid - 0.72) / 0.05) ** 2),
                np.sin(2 * np.pi * grid),
                np.sin(3 * np.pi * grid),
                np.cos(5 * np.pi * grid),
                grid * (1.0 - grid),
            ],
        )
        # weight picks out the objective-carrying profiles
        self._weight = (
            self.profiles[:, 0]
            + self.profiles[:, 4]
            + self.profiles[:, 5]
            + self.profiles[:, 6]
        )

    def _coords(self, mu):
        mu = np.asarray(mu, dtype=float)
        return mu @ self.direction, mu @ self._b1, mu @ self._b2

    def value(self, mu):
        y, u, v = self._coords(mu)
        return float(
            y**3 + y + self.leak * (np.sin(np.pi * u) + np.sin(np.pi * v) + u * v)
        )

    def gradient(self, mu):
        y, u, v = self._coords(mu)
        grad = (3.0 * y**2 + 1.0) * self.direction
        grad = grad + self.leak * (
            (np.pi * np.cos(np.pi * u) + v) * self._b1
            + (np.pi * np.cos(np.pi * v) + u) * self._b2
        )
        return grad

    def field(self, mu):
        y, u, v = self._coords(mu)
        coeffs = np.array(
            [
                y**3 + y,
                y**2,
                np.cos(2.0 * y),
                0.5 * np.sin(3.0 * y),
                self.leak * np.sin(np.pi * u),
                self.leak * np.sin(np.pi * v),
                self.leak * u * v,
            ]
        )
        return self.profiles @ coeffs

    def field_functional(self, field):
        return float(self._weight @ np.asarray(field, dtype=float))

    def minimum(self):
        """Analytic box minimizer: h is increasing, so the best corner.

        q perturbs the corner value but, at the shipped leak levels,
        cannot move the minimizer off the corner that minimizes y.
        """
        corner = -np.sign(self.direction)
        return corner, self.value(corner)


class HeatRegimeOracle:
    """Relaxation u(t) = u_inf(mu) + sum_j a_j(mu) exp(-rate_j t) w_j.

    The long-time field u_inf is closed form, so the regime forecast
    built from a few early snapshots has an exact reference.  The scalar
    objective is a fixed weighted integral of the regime field.
    """

    name = "heat-regime"

    _RATES = (0.8, 1.7, 3.1)

    def __init__(self, n_dof=400):
        self.n_dof = int(n_dof)
        self.box = ParameterBox(lower=-np.ones(3), upper=np.ones(3))
        grid = np.linspace(0.0, 1.0, self.n_dof)
        profiles = _orthonormal_profiles(
            grid,
            [
                np.ones_like(grid),
                np.sin(np.pi * grid),
                np.sin(2 * np.pi * grid),
                np.cos(np.pi * grid),
                grid,
                np.exp(-((grid - 0.5) ** 2) / 0.05),
                np.sin(3 * np.pi * grid),
            ],
        )
        self._steady = profiles[:, :4]
        self._transient = profiles[:, 4:]
        self._weight = self._steady @ np.array([1.0, 0.8, -0.5, 0.3])

    def _steady_coeffs(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.array([1.0, mu[0], mu[1] ** 2, np.sin(mu[2])])

    def _transient_coeffs(self, mu):
        mu = np.asarray(mu, dtype=float)
        return np.array([1.0 + mu[0], 2.0 * mu[1], 1.5 - mu[2]])

    def field(self, mu):
        """The exact regime (steady) field."""
        return self._steady @ self._steady_coeffs(mu)

    def value(self, mu):
        return float(self._weight @ self.field(mu))

    def gradient(self, mu):
        mu = np.asarray(mu, dtype=float)
        w = self._weight
        return np.array(
            [
                w @ self._steady[:, 1],
                2.0 * mu[1] * (w @ self._steady[:, 2]),
                np.cos(mu[2]) * (w @ self._steady[:, 3]),
            ]
        )

    def field_functional(self, field):
        return float(self._weight @ np.asarray(field, dtype=float))

    def time_series(self, mu, n_snapshots=12, dt=0.3, t0=0.0) -> SnapshotSeries:
        times = t0 + dt * np.arange(n_snapshots)
        steady = self.field(mu)
        amps = self._transient_coeffs(mu)
        data = np.tile(steady[:, None], (1, n_snapshots))
        for j, rate in enumerate(self._RATES):
            data += np.outer(self._transient[:, j], amps[j] * np.exp(-rate * times))
        return SnapshotSeries(data=data, dt=dt, t0=t0)


def _uv_sphere(center, radius, n_theta=12, n_phi=12):
    """Closed triangulated sphere; poles are shared vertices."""
    verts = [np.array(center) + [0.0, 0.0, radius]]
    for i in range(1, n_theta):
        th = np.pi * i / n_theta
        for j in range(n_phi):
            ph = 2 * np.pi * j / n_phi
            verts.append(
                np.array(center)
                + radius
                * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            )
    verts.append(np.array(center) + [0.0, 0.0, -radius])
    tris = []
    def ring(i, j):
        return 1 + (i - 1) * n_phi + (j % n_phi)
    for j in range(n_phi):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_theta - 1):
        for j in range(n_phi):
            tris.append([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)])
            tris.append([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)])
    south = len(verts) - 1
    for j in range(n_phi):
        tris.append([south, ring(n_theta - 1, j + 1), ring(n_theta - 1, j)])
    return TriMesh(vertices=np.array(verts), triangles=np.array(tris))


class GeoDemoOracle:
    """Shape-matching objective over a lattice-deformed template mesh.

    Five control-point displacement components drive a 3x3x3 lattice
    around a sphere; the objective is the mean squared vertex distance
    to the shape deformed with a fixed target parameter vector, so the
    global minimum is the target itself with value zero.  The field
    output is the flattened deformed vertex array.
    """

    name = "geo-demo"

    _TARGET = np.array([0.12, -0.07, 0.20, 0.05, -0.15])

    def __init__(self, resolution=12):
        self.mesh = _uv_sphere((0.5, 0.5, 0.5), 0.35, resolution, resolution)
        self.lattice = FFDLattice.axis_aligned(np.zeros(3), np.ones(3), (3, 3, 3))
        self.pmap = GeoParamMap(
            entries=[
                ((1, 1, 1), "x"),
                ((1, 1, 1), "y"),
                ((2, 1, 1), "x"),
                ((1, 2, 1), "z"),
                ((1, 1, 2), "y"),
            ],
            bounds=[(-0.3, 0.3)] * 5,
        )
        self.box = ParameterBox(lower=-0.3 * np.ones(5), upper=0.3 * np.ones(5))
        self._target_field = self._deformed_field(self._TARGET)

    def _deformed_field(self, mu):
        lattice = apply_parameters(self.lattice, self.pmap, mu)
        return deform_mesh(lattice, self.mesh).vertices.ravel()

    def field(self, mu):
        return self._deformed_field(mu)

    def value(self, mu):
        return self.field_functional(self._deformed_field(mu))

    def field_functional(self, field):
        diff = np.asarray(field, dtype=float) - self._target_field
        return float(np.mean(diff**2))

    def minimum(self):
        return self._TARGET.copy(), 0.0


_ORACLES = {
    RidgeDragOracle.name: RidgeDragOracle,
    HeatRegimeOracle.name: HeatRegimeOracle,
    GeoDemoOracle.name: GeoDemoOracle,
}


def make_oracle(spec):
    """Instantiate a shipped oracle from a config mapping with a ``name`` key."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in _ORACLES:
        raise ValueError(
            f"unknown oracle '{name}'; available: {sorted(_ORACLES)}"
        )
    return _ORACLES[name](**spec)
