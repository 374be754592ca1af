"""Polygonal mesh container, validation, benchmark generators and JSON I/O.

A mesh is a flat list of 2D vertices plus counter-clockwise polygons given as
vertex-index loops.  Named node sets carry boundary-condition and load
locations.  Generators cover the structured benchmark geometries (rectangle,
annular ring, sinusoidal arch); arbitrary polygon meshes enter through the
JSON file format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MeshError",
    "PolyMesh",
    "ElementGeometry",
    "polygon_geometry",
    "validate_mesh",
    "generate_rect",
    "generate_annulus",
    "generate_arch",
    "generate_mesh",
    "load_mesh",
    "save_mesh",
]


class MeshError(Exception):
    """Invalid mesh data (bad polygon, dangling index, unparseable file)."""


@dataclass(frozen=True)
class PolyMesh:
    """Immutable polygonal mesh: vertices, CCW polygons, named node sets."""

    vertices: np.ndarray                      # (n_nodes, 2) float
    polygons: list[np.ndarray]                # each (n_v,) int, CCW
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(
            self, "polygons", [np.asarray(p, dtype=int) for p in self.polygons]
        )
        object.__setattr__(
            self,
            "node_sets",
            {k: np.asarray(v, dtype=int) for k, v in self.node_sets.items()},
        )

    @property
    def n_nodes(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return len(self.polygons)


@dataclass(frozen=True)
class ElementGeometry:
    """Per-polygon geometric data used by the element machinery.

    Edge j runs from local vertex j to vertex j+1 (wrapping), so the trailing
    edge of vertex j is edge j-1 (edge n_v-1 for the first vertex).
    """

    area: float
    centroid: np.ndarray        # (2,)
    diameter: float             # max pairwise vertex distance
    edge_lengths: np.ndarray    # (n_v,)
    edge_normals: np.ndarray    # (n_v, 2) outward unit normals

    @property
    def n_v(self) -> int:
        return self.edge_lengths.shape[0]


def _signed_area_centroid(coords: np.ndarray) -> tuple[float, np.ndarray]:
    """Shoelace signed area and area-weighted centroid of a closed loop."""
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if area == 0.0:
        return 0.0, coords.mean(axis=0)
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True if open segments p1-p2 and q1-q2 cross at an interior point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        scale = max(abs(b[0] - a[0]), abs(b[1] - a[1]), abs(c[0] - a[0]), abs(c[1] - a[1]), 1.0)
        if abs(v) <= 1e-14 * scale * scale:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _polygon_is_simple(coords: np.ndarray) -> bool:
    """Check that no two non-adjacent edges of the loop cross."""
    n = coords.shape[0]
    for i in range(n):
        a1, a2 = coords[i], coords[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = coords[j], coords[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return False
    return True


def polygon_geometry(mesh: PolyMesh, elem: int) -> ElementGeometry:
    """Area, centroid, diameter and edge data for polygon ``elem``.

    Raises:
        MeshError: degenerate polygon (non-positive area, zero-length edge),
            naming the offending element.
    """
    poly = mesh.polygons[elem]
    coords = mesh.vertices[poly]
    area, centroid = _signed_area_centroid(coords)
    if area <= 0.0:
        raise MeshError(
            f"element {elem}: degenerate polygon (signed area {area:.3e}; "
            "vertices must be CCW and non-collinear)"
        )
    edges = np.roll(coords, -1, axis=0) - coords
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths <= 0.0):
        raise MeshError(f"element {elem}: zero-length edge")
    # CCW loop: outward normal of edge (dx, dy) is (dy, -dx) / length
    normals = np.column_stack((edges[:, 1], -edges[:, 0])) / lengths[:, None]
    diffs = coords[:, None, :] - coords[None, :, :]
    diameter = float(np.sqrt(np.max(np.sum(diffs**2, axis=2))))
    return ElementGeometry(
        area=area,
        centroid=centroid,
        diameter=diameter,
        edge_lengths=lengths,
        edge_normals=normals,
    )


def validate_mesh(mesh: PolyMesh) -> list[str]:
    """Collect all invariant violations; an empty list means the mesh is valid."""
    report: list[str] = []
    n_nodes = mesh.n_nodes
    if mesh.vertices.ndim != 2 or mesh.vertices.shape[1] != 2:
        report.append("vertices array must have shape (n_nodes, 2)")
        return report
    if not np.all(np.isfinite(mesh.vertices)):
        report.append("vertices contain non-finite coordinates")
    for e, poly in enumerate(mesh.polygons):
        if poly.size < 3:
            report.append(f"element {e}: fewer than 3 vertices")
            continue
        if np.any(poly < 0) or np.any(poly >= n_nodes):
            report.append(f"element {e}: vertex index out of range")
            continue
        if len(np.unique(poly)) != poly.size:
            report.append(f"element {e}: repeated vertex index")
            continue
        coords = mesh.vertices[poly]
        area, _ = _signed_area_centroid(coords)
        if area <= 0.0:
            report.append(
                f"element {e}: non-positive signed area {area:.6e} (CW orientation or degenerate)"
            )
            continue
        if not _polygon_is_simple(coords):
            report.append(f"element {e}: self-intersecting boundary loop")
    for name, idx in mesh.node_sets.items():
        if idx.size and (np.any(idx < 0) or np.any(idx >= n_nodes)):
            report.append(f"node set '{name}': vertex index out of range")
    return report


def _check_counts(**kwargs) -> None:
    for key, val in kwargs.items():
        if val < 1:
            raise MeshError(f"generator spec: '{key}' must be >= 1, got {val}")


def _check_positive(**kwargs) -> None:
    for key, val in kwargs.items():
        if not val > 0.0:
            raise MeshError(f"generator spec: '{key}' must be > 0, got {val}")


def _graded_coords(length: float, n: int, grade: float) -> np.ndarray:
    """Coordinates of n+1 grid lines over [0, length].

    ``grade`` is the ratio of the last cell size to the first; cells grow
    geometrically, so grade > 1 refines toward 0.
    """
    if grade == 1.0 or n == 1:
        return np.linspace(0.0, length, n + 1)
    q = grade ** (1.0 / (n - 1))
    sizes = q ** np.arange(n)
    sizes *= length / sizes.sum()
    return np.concatenate(([0.0], np.cumsum(sizes)))


def generate_rect(
    lx: float, ly: float, nx: int, ny: int, grade_x: float = 1.0
) -> PolyMesh:
    """Structured quad mesh of [0, lx] x [0, ly] with edge node sets.

    ``grade_x`` geometrically biases column widths toward x = 0 (see
    :func:`_graded_coords`); the default 1.0 is uniform.
    """
    _check_positive(lx=lx, ly=ly, grade_x=grade_x)
    _check_counts(nx=nx, ny=ny)
    xs = _graded_coords(lx, nx, grade_x)
    ys = np.linspace(0.0, ly, ny + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack((xg.ravel(), yg.ravel()))

    def nid(i, j):
        return i * (ny + 1) + j

    polygons = []
    for i in range(nx):
        for j in range(ny):
            polygons.append(
                np.array([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)])
            )
    node_sets = {
        "left": np.array([nid(0, j) for j in range(ny + 1)]),
        "right": np.array([nid(nx, j) for j in range(ny + 1)]),
        "bottom": np.array([nid(i, 0) for i in range(nx + 1)]),
        "top": np.array([nid(i, ny) for i in range(nx + 1)]),
    }
    return PolyMesh(vertices, polygons, node_sets)


def generate_arch(
    span: float,
    depth: float,
    nx: int,
    ny: int,
    load_width: float = 0.0,
    support_width: float = 0.0,
) -> PolyMesh:
    """Sinusoidal arch: rectangular strip with y shifted by sin(pi*x/span).

    Node sets mark the bottom corners ("support_left", "support_right") and
    the midspan top region ("load").  The widths are physical lengths along
    the edge: width 0 selects the single corner/crown vertex, a positive
    width selects every edge vertex within that distance, keeping the loaded
    and supported patches mesh-independent under refinement (a true point
    load or pin is singular in 2D and never converges locally).  nx must be
    even so the crown vertex exists.
    """
    _check_positive(span=span, depth=depth)
    _check_counts(nx=nx, ny=ny)
    if load_width < 0.0 or support_width < 0.0:
        raise MeshError("generator spec: arch set widths must be >= 0")
    if nx % 2 != 0:
        raise MeshError("generator spec: arch requires even 'nx' for a midspan top vertex")
    rect = generate_rect(span, depth, nx, ny)
    vx = rect.vertices.copy()
    vx[:, 1] += np.sin(np.pi * vx[:, 0] / span)

    def nid(i, j):
        return i * (ny + 1) + j

    top = np.array([nid(i, ny) for i in range(nx + 1)])
    bottom = np.array([nid(i, 0) for i in range(nx + 1)])
    tol = 1e-12 * span
    near_mid = np.abs(vx[top, 0] - 0.5 * span) <= 0.5 * load_width + tol
    near_left = vx[bottom, 0] <= support_width + tol
    near_right = vx[bottom, 0] >= span - support_width - tol
    node_sets = {
        "support_left": bottom[near_left],
        "support_right": bottom[near_right],
        "load": top[near_mid],
    }
    return PolyMesh(vx, rect.polygons, node_sets)


def generate_annulus(
    r_inner: float,
    r_outer: float,
    n_circ: int,
    n_rad: int,
    load_width: int = 1,
    support_width: int = 3,
) -> PolyMesh:
    """Full annular ring meshed by a mapped quad grid with the seam merged.

    Vertices lie on n_rad+1 concentric circles at n_circ equally spaced
    angles; the theta = 0 and theta = 2*pi columns are the same vertex
    indices (merged by index identification, not coordinate matching).
    Node sets "top" and "bottom" pick ``load_width`` / ``support_width``
    outer-circle vertices centred on theta = pi/2 and 3*pi/2, so n_circ must
    be divisible by 4 and the widths odd.
    """
    _check_positive(r_inner=r_inner, r_outer=r_outer)
    _check_counts(n_circ=n_circ, n_rad=n_rad, load_width=load_width, support_width=support_width)
    if r_outer <= r_inner:
        raise MeshError("generator spec: annulus requires r_outer > r_inner")
    if n_circ % 4 != 0:
        raise MeshError("generator spec: annulus requires n_circ divisible by 4")
    if n_circ < 8:
        raise MeshError("generator spec: annulus requires n_circ >= 8")
    if load_width % 2 == 0 or support_width % 2 == 0:
        raise MeshError("generator spec: annulus set widths must be odd node counts")

    radii = np.linspace(r_inner, r_outer, n_rad + 1)
    thetas = 2.0 * np.pi * np.arange(n_circ) / n_circ
    vertices = np.empty((n_circ * (n_rad + 1), 2))

    def nid(ring, col):
        return ring * n_circ + (col % n_circ)

    for ring, r in enumerate(radii):
        for col, th in enumerate(thetas):
            vertices[nid(ring, col)] = (r * math.cos(th), r * math.sin(th))

    polygons = []
    for ring in range(n_rad):
        for col in range(n_circ):
            polygons.append(
                np.array([nid(ring, col), nid(ring + 1, col), nid(ring + 1, col + 1), nid(ring, col + 1)])
            )

    def arc_set(center_col: int, width: int) -> np.ndarray:
        half = (width - 1) // 2
        return np.array(sorted(nid(n_rad, center_col + k) for k in range(-half, half + 1)))

    node_sets = {
        "top": arc_set(n_circ // 4, load_width),
        "bottom": arc_set(3 * n_circ // 4, support_width),
    }
    return PolyMesh(vertices, polygons, node_sets)


_GENERATORS = {
    "rect": (generate_rect, ("lx", "ly", "nx", "ny"), ("grade_x",)),
    "arch": (generate_arch, ("span", "depth", "nx", "ny"), ("load_width", "support_width")),
    "annulus": (
        generate_annulus,
        ("r_inner", "r_outer", "n_circ", "n_rad"),
        ("load_width", "support_width"),
    ),
}


def generate_mesh(spec: dict) -> PolyMesh:
    """Dispatch a generator spec dict: {"shape": "rect"|"annulus"|"arch", ...}."""
    if "shape" not in spec:
        raise MeshError("generator spec: missing 'shape'")
    shape = spec["shape"]
    if shape not in _GENERATORS:
        raise MeshError(f"generator spec: unknown shape '{shape}'")
    fn, required, optional = _GENERATORS[shape]
    kwargs = {}
    for key in required:
        if key not in spec:
            raise MeshError(f"generator spec: '{shape}' requires '{key}'")
        kwargs[key] = spec[key]
    for key in optional:
        if key in spec:
            kwargs[key] = spec[key]
    extra = set(spec) - {"shape"} - set(required) - set(optional)
    if extra:
        raise MeshError(f"generator spec: unknown keys {sorted(extra)} for shape '{shape}'")
    return fn(**kwargs)


def save_mesh(mesh: PolyMesh, path) -> None:
    """Write the JSON mesh file (0-based indices, full-precision decimals).

    json serializes floats with shortest round-trip repr, so save/load is
    bit-exact.
    """
    payload = {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "polygons": [[int(i) for i in poly] for poly in mesh.polygons],
        "node_sets": {name: [int(i) for i in idx] for name, idx in mesh.node_sets.items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_mesh(path) -> PolyMesh:
    """Read and validate a JSON mesh file.

    Raises:
        MeshError: parse failures or invariant violations, with element /
            key context.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from exc
    for key in ("vertices", "polygons"):
        if key not in data:
            raise MeshError(f"{path}: missing '{key}'")
    extra = set(data) - {"vertices", "polygons", "node_sets"}
    if extra:
        raise MeshError(f"{path}: unknown keys {sorted(extra)}")
    mesh = PolyMesh(
        vertices=np.asarray(data["vertices"], dtype=float),
        polygons=[np.asarray(p, dtype=int) for p in data["polygons"]],
        node_sets={k: np.asarray(v, dtype=int) for k, v in data.get("node_sets", {}).items()},
    )
    report = validate_mesh(mesh)
    if report:
        raise MeshError(f"{path}: invalid mesh: " + "; ".join(report))
    return mesh
