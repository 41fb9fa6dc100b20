"""Free-form deformation through a trilinear-or-higher Bernstein lattice.

A box with origin ``o`` and edge matrix ``A`` (columns are the edges) is
mapped to the unit reference cube by ``s = A^-1 (x - o)``.  Inside the
cube the point is pushed through the Bernstein tensor product

    T(s) = sum_ijk B_i(s1) B_j(s2) B_k(s3) * (P0_ijk + d_ijk)

where ``P0`` is the undisplaced control grid and ``d`` the control-point
displacements (the geometric design parameters), then mapped back with
``A s + o``.  Points outside the box pass through unchanged.  With all
displacements zero the composition is the identity, because Bernstein
bases reproduce linear functions exactly.

Displacements live in reference-box coordinates, so they are
dimensionless and the deformation scales with the box.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .mesh import TriMesh

__all__ = [
    "FFDLattice",
    "GeoParamMap",
    "to_reference",
    "deform_point",
    "deform_points",
    "deform_mesh",
    "apply_parameters",
]

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


@dataclass(frozen=True)
class FFDLattice:
    """Control-point box: origin, edge vectors, grid shape, displacements.

    ``axes`` holds the three box edge vectors as columns.  ``counts`` is
    the number of control points per axis (each >= 2, so the Bernstein
    degree per axis is ``counts - 1``).  ``displacements`` has shape
    ``counts + (3,)`` and is expressed in reference-box coordinates.
    """

    origin: np.ndarray
    axes: np.ndarray
    counts: tuple
    displacements: np.ndarray = None

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        axes = np.asarray(self.axes, dtype=float).reshape(3, 3)
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 3 or any(c < 2 for c in counts):
            raise ValueError(f"counts must be three values >= 2, got {counts}")
        if not (np.all(np.isfinite(origin)) and np.all(np.isfinite(axes))):
            raise ValueError("origin/axes must be finite")
        col_norms = np.linalg.norm(axes, axis=0)
        scale3 = float(np.prod(col_norms))
        if scale3 == 0.0 or abs(np.linalg.det(axes)) <= 1e-12 * scale3:
            raise ValueError("axes matrix is singular or nearly singular")
        if self.displacements is None:
            disp = np.zeros(counts + (3,))
        else:
            disp = np.asarray(self.displacements, dtype=float)
            if disp.shape != counts + (3,):
                raise ValueError(
                    f"displacements must have shape {counts + (3,)}, got {disp.shape}"
                )
            if not np.all(np.isfinite(disp)):
                raise ValueError("displacements must be finite")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "displacements", disp)

    @classmethod
    def axis_aligned(cls, origin, lengths, counts, displacements=None):
        """Axis-aligned box with the given edge lengths."""
        return cls(
            origin=origin,
            axes=np.diag(np.asarray(lengths, dtype=float)),
            counts=counts,
            displacements=displacements,
        )

    def control_grid(self):
        """Reference-cube control points including displacements, shape counts+(3,)."""
        l, m, n = (c - 1 for c in self.counts)
        gi, gj, gk = np.meshgrid(
            np.arange(self.counts[0]) / l,
            np.arange(self.counts[1]) / m,
            np.arange(self.counts[2]) / n,
            indexing="ij",
        )
        return np.stack([gi, gj, gk], axis=-1) + self.displacements

    def with_displacements(self, displacements):
        return FFDLattice(
            origin=self.origin,
            axes=self.axes,
            counts=self.counts,
            displacements=displacements,
        )


@dataclass(frozen=True)
class GeoParamMap:
    """Which control-point components a design vector drives, and its bounds.

    ``entries`` is a list of ``((i, j, k), axis)`` pairs; ``bounds`` one
    closed interval per entry.  Applying a design vector sets exactly
    those displacement components and zeroes every other one.
    """

    entries: tuple
    bounds: tuple = field(default=None)

    def __post_init__(self):
        norm_entries = []
        for ijk, axis in self.entries:
            key = (tuple(int(v) for v in ijk), _AXIS_NAMES[axis])
            norm_entries.append(key)
        if len(set(norm_entries)) != len(norm_entries):
            raise ValueError("parameter map entries must be distinct")
        if self.bounds is None:
            norm_bounds = tuple((-np.inf, np.inf) for _ in norm_entries)
        else:
            norm_bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(norm_bounds) != len(norm_entries):
                raise ValueError("need one bound per entry")
            for lo, hi in norm_bounds:
                if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                    raise ValueError(f"invalid bound ({lo}, {hi})")
        object.__setattr__(self, "entries", tuple(norm_entries))
        object.__setattr__(self, "bounds", norm_bounds)

    def __len__(self):
        return len(self.entries)


def _bernstein_matrix(degree, s):
    """Rows: evaluation points, columns: Bernstein basis values B_i^degree."""
    s = np.asarray(s, dtype=float)[:, None]
    i = np.arange(degree + 1)[None, :]
    coeff = np.array([comb(degree, k) for k in range(degree + 1)])[None, :]
    return coeff * s**i * (1.0 - s) ** (degree - i)


def to_reference(lattice: FFDLattice, x):
    """Map a physical point into the reference cube.

    Returns ``(s, inside)`` where ``inside`` is False when any component
    of ``s`` falls outside [0, 1].
    """
    x = np.asarray(x, dtype=float).reshape(3)
    s = np.linalg.solve(lattice.axes, x - lattice.origin)
    inside = bool(np.all((s >= 0.0) & (s <= 1.0)))
    return s, inside


def deform_points(lattice: FFDLattice, points):
    """Apply the deformation map to an (n, 3) array of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if not lattice.displacements.any():
        # the Bernstein map is the identity; skip evaluation so zero
        # displacements reproduce the input bitwise
        return pts.copy()
    s = np.linalg.solve(lattice.axes, (pts - lattice.origin).T).T
    inside = np.all((s >= 0.0) & (s <= 1.0), axis=1)
    out = pts.copy()
    if not np.any(inside):
        return out
    si = s[inside]
    l, m, n = (c - 1 for c in lattice.counts)
    b1 = _bernstein_matrix(l, si[:, 0])
    b2 = _bernstein_matrix(m, si[:, 1])
    b3 = _bernstein_matrix(n, si[:, 2])
    t = np.einsum("pi,pj,pk,ijkc->pc", b1, b2, b3, lattice.control_grid())
    out[inside] = lattice.origin + t @ lattice.axes.T
    return out


def deform_point(lattice: FFDLattice, x):
    """Deform a single 3-vector; points outside the box are fixed points."""
    return deform_points(lattice, np.asarray(x, dtype=float).reshape(1, 3))[0]


def deform_mesh(lattice: FFDLattice, mesh: TriMesh) -> TriMesh:
    """Vertex-wise deformation; connectivity is untouched."""
    return mesh.with_vertices(deform_points(lattice, mesh.vertices))


def apply_parameters(lattice: FFDLattice, pmap: GeoParamMap, mu) -> FFDLattice:
    """New lattice whose mapped displacement components are set to ``mu``.

    All unmapped components become zero; the input lattice is unchanged.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if len(mu) != len(pmap):
        raise ValueError(f"expected {len(pmap)} parameters, got {len(mu)}")
    disp = np.zeros(lattice.counts + (3,))
    for value, (ijk, axis), (lo, hi) in zip(mu, pmap.entries, pmap.bounds):
        if not lo <= value <= hi:
            raise ValueError(f"parameter {value} outside bounds [{lo}, {hi}]")
        if any(not 0 <= idx < cnt for idx, cnt in zip(ijk, lattice.counts)):
            raise ValueError(f"control point {ijk} outside lattice {lattice.counts}")
        disp[ijk + (axis,)] = value
    return lattice.with_displacements(disp)
