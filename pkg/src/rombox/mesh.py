"""Triangle surface meshes and the file formats the geometry stage speaks.

Supported formats are a deliberately small subset: ASCII STL
(solid / facet normal / outer loop / vertex / endloop / endfacet /
endsolid) and a plain point-cloud CSV with an ``x,y,z`` header.  STL
stores a triangle soup, so reading welds exactly-equal vertex
coordinates back into shared indices; writing recomputes one normal per
facet from the triangle itself.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TriMesh",
    "read_stl",
    "write_stl",
    "read_points_csv",
    "write_points_csv",
    "load_geometry",
    "save_geometry",
]


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh: ``vertices`` (n, 3), ``triangles`` (m, 3) int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=int)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        if t.size and (t.ndim != 2 or t.shape[1] != 3):
            raise ValueError(f"triangles must be (m, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle indices out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t.reshape(-1, 3))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def with_vertices(self, vertices):
        """Same connectivity, new vertex positions."""
        return TriMesh(vertices=vertices, triangles=self.triangles)


def _fmt(x):
    return repr(float(x))


def write_stl(mesh: TriMesh, path, name="rombox"):
    """Write an ASCII STL file, recomputing facet normals on the fly."""
    v, t = mesh.vertices, mesh.triangles
    with open(path, "w") as fh:
        fh.write(f"solid {name}\n")
        for tri in t:
            p0, p1, p2 = v[tri[0]], v[tri[1]], v[tri[2]]
            n = np.cross(p1 - p0, p2 - p0)
            norm = np.linalg.norm(n)
            n = n / norm if norm > 0 else np.zeros(3)
            fh.write(f"  facet normal {_fmt(n[0])} {_fmt(n[1])} {_fmt(n[2])}\n")
            fh.write("    outer loop\n")
            for p in (p0, p1, p2):
                fh.write(f"      vertex {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
            fh.write("    endloop\n")
            fh.write("  endfacet\n")
        fh.write(f"endsolid {name}\n")


def read_stl(path) -> TriMesh:
    """Parse the ASCII STL subset written by :func:`write_stl`.

    Vertices with bitwise-equal coordinates are welded into one index so
    the triangle soup becomes a connected mesh again.
    """
    vertices = []
    index_of = {}
    triangles = []
    current = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens:
                continue
            head = tokens[0].lower()
            if head == "vertex":
                if len(tokens) != 4:
                    raise ValueError(f"{path}:{lineno}: malformed vertex record")
                try:
                    xyz = tuple(float(tok) for tok in tokens[1:4])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: non-numeric vertex") from exc
                idx = index_of.get(xyz)
                if idx is None:
                    idx = len(vertices)
                    index_of[xyz] = idx
                    vertices.append(xyz)
                current.append(idx)
            elif head == "endloop":
                if len(current) != 3:
                    raise ValueError(
                        f"{path}:{lineno}: facet with {len(current)} vertices"
                    )
                triangles.append(tuple(current))
                current = []
            elif head in ("solid", "endsolid", "facet", "endfacet", "outer"):
                continue
            else:
                raise ValueError(f"{path}:{lineno}: unexpected record '{tokens[0]}'")
    if not vertices:
        raise ValueError(f"{path}: no vertices found")
    return TriMesh(
        vertices=np.array(vertices, dtype=float),
        triangles=np.array(triangles, dtype=int).reshape(-1, 3),
    )


def write_points_csv(points, path):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    with open(path, "w") as fh:
        fh.write("x,y,z\n")
        for p in points:
            fh.write(f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}\n")


def read_points_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        if header != "x,y,z":
            raise ValueError(f"{path}: expected 'x,y,z' header, got '{header}'")
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            parts = raw.strip().split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from exc
    if not rows:
        raise ValueError(f"{path}: no points found")
    return np.array(rows, dtype=float)


def load_geometry(path):
    """Read either an STL mesh or a point-cloud CSV, keyed by extension.

    Returns a TriMesh in both cases; a point cloud comes back with an
    empty triangle list.
    """
    path = str(path)
    if path.lower().endswith(".stl"):
        return read_stl(path)
    if path.lower().endswith(".csv"):
        return TriMesh(vertices=read_points_csv(path), triangles=np.zeros((0, 3), int))
    raise ValueError(f"unsupported geometry format: {path} (use .stl or .csv)")


def save_geometry(mesh: TriMesh, path):
    path = str(path)
    if path.lower().endswith(".stl"):
        if mesh.n_triangles == 0:
            raise ValueError("cannot write a point cloud as STL; use .csv")
        write_stl(mesh, path)
    elif path.lower().endswith(".csv"):
        write_points_csv(mesh.vertices, path)
    else:
        raise ValueError(f"unsupported geometry format: {path} (use .stl or .csv)")
