"""Shared test oracles and fixtures.

Everything here is deliberately independent of the implementation paths it
checks: brute-force geometry, boundary-integral shape-function gradients,
Gauss-quadrature stiffness, a one-dimensional return map, and a
displacement-controlled Newton driver used as the limit-point oracle.
"""

from __future__ import annotations

import numpy as np

from polyvem.analysis import FESystem, Problem
from polyvem.assembly import CorotModel
from polyvem.mesh import PolyMesh
from polyvem.vem import build_projection, element_stiffness
from polyvem.mesh import polygon_geometry


# ---------------------------------------------------------------------------
# geometry oracles
# ---------------------------------------------------------------------------

def edge_normal_oracle(coords: np.ndarray) -> np.ndarray:
    """Outward unit normals of a CCW polygon, edge by edge via cross products.

    For each edge, rotate the edge direction both ways and keep the candidate
    whose dot product with (edge midpoint - centroid) is positive; valid as a
    cross-check for polygons that are star-shaped about their centroid.
    """
    centroid = coords.mean(axis=0)
    n_v = coords.shape[0]
    normals = np.empty((n_v, 2))
    for j in range(n_v):
        a, b = coords[j], coords[(j + 1) % n_v]
        t = (b - a) / np.linalg.norm(b - a)
        for cand in (np.array([t[1], -t[0]]), np.array([-t[1], t[0]])):
            if cand @ (0.5 * (a + b) - centroid) > 0.0:
                normals[j] = cand
                break
    return normals


def hat_mean_gradient_oracle(coords: np.ndarray) -> np.ndarray:
    """Mean gradient (1/A) contour-integral of phi_i n ds for edge hats, (n_v, 2).

    The boundary trace of the hat at vertex i is linear on its two adjacent
    edges, so each edge contributes exactly half its length times its normal.
    """
    x, y = coords[:, 0], coords[:, 1]
    area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    edges = np.roll(coords, -1, axis=0) - coords
    lengths = np.linalg.norm(edges, axis=1)
    normals = np.column_stack((edges[:, 1], -edges[:, 0])) / lengths[:, None]
    ln = lengths[:, None] * normals
    return 0.5 * (np.roll(ln, 1, axis=0) + ln) / area


def quad_mean_gradient_stiffness(coords: np.ndarray, C: np.ndarray, t: float) -> np.ndarray:
    """Constant-strain quad stiffness by 2x2 Gauss quadrature of Q4 gradients.

    Averages the bilinear shape-function gradients over the element, builds
    the constant B from them and returns t * A * B^T C B.
    """
    gp = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    grads = np.zeros((4, 2))
    area = 0.0
    for xi in gp:
        for eta in gp:
            dn = 0.25 * np.array(
                [
                    [-(1 - eta), -(1 - xi)],
                    [(1 - eta), -(1 + xi)],
                    [(1 + eta), (1 + xi)],
                    [-(1 + eta), (1 - xi)],
                ]
            )
            J = dn.T @ coords
            detJ = np.linalg.det(J)
            grads += (dn @ np.linalg.inv(J)) * detJ
            area += detJ
    grads /= area
    B = np.zeros((3, 8))
    B[0, 0::2] = grads[:, 0]
    B[1, 1::2] = grads[:, 1]
    B[2, 0::2] = grads[:, 1]
    B[2, 1::2] = grads[:, 0]
    return t * area * B.T @ C @ B


# ---------------------------------------------------------------------------
# random polygons
# ---------------------------------------------------------------------------

def random_polygon(rng: np.random.Generator, n_v: int, convex: bool) -> np.ndarray:
    """Simple CCW polygon with n_v vertices, star-shaped about the origin.

    Sorted angles with jittered radii; uniform radii give a convex regular
    shape, strong jitter produces non-convex stars.
    """
    while True:
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=n_v))
        gaps = np.diff(angles, append=angles[0] + 2.0 * np.pi)
        # gaps below pi keep the loop CCW and simple for any radii
        if np.min(gaps) < 0.15 or np.max(gaps) > 2.8:
            continue
        if convex:
            radii = np.full(n_v, rng.uniform(0.5, 2.0))
        else:
            radii = rng.uniform(0.4, 2.0, size=n_v)
        coords = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
        coords += rng.uniform(-3.0, 3.0, size=2)
        if convex and n_v > 3:
            # keep only genuinely convex samples
            d = np.roll(coords, -1, axis=0) - coords
            cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
            if np.any(cross <= 0.0):
                continue
        return coords


def is_convex(coords: np.ndarray) -> bool:
    d = np.roll(coords, -1, axis=0) - coords
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    return bool(np.all(cross > 0.0))


# ---------------------------------------------------------------------------
# non-convex patch-test fixture
# ---------------------------------------------------------------------------

def nonconvex_unit_square_mesh() -> PolyMesh:
    """Unit-square mesh mixing an L-shaped hexagon, a pentagon with a straight
    (hanging-node) vertex and quads; contains interior nodes."""
    vertices = np.array(
        [
            [0.0, 0.0],   # 0
            [0.5, 0.0],   # 1
            [1.0, 0.0],   # 2
            [0.0, 0.5],   # 3
            [0.45, 0.55], # 4 interior
            [1.0, 0.5],   # 5
            [0.0, 1.0],   # 6
            [0.5, 1.0],   # 7
            [1.0, 1.0],   # 8
            [0.75, 0.25], # 9 interior
        ]
    )
    polygons = [
        np.array([0, 1, 9, 4, 3]),       # pentagon, interior nodes 9 and 4
        np.array([1, 2, 5, 9]),          # quad with edge 9-5
        np.array([9, 5, 8, 7, 4]),       # pentagon
        np.array([3, 4, 7, 6]),          # quad
    ]
    return PolyMesh(vertices, polygons, {})


def lshape_hexagon() -> np.ndarray:
    return np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])


# ---------------------------------------------------------------------------
# linear patch-test solve
# ---------------------------------------------------------------------------

def patch_test_solve(mesh: PolyMesh, C, t: float, field, variant: str = "mengolini"):
    """Prescribe a linear displacement field on boundary nodes and solve.

    Returns (u_solution, u_exact, strains) where strains stacks each
    element's recovered Voigt strain.  Boundary nodes are detected as nodes
    on the bounding box of the mesh (the fixtures are unit squares).
    """
    n = mesh.n_nodes
    K = np.zeros((2 * n, 2 * n))
    projs = []
    for e in range(mesh.n_elements):
        geom = polygon_geometry(mesh, e)
        coords = mesh.vertices[mesh.polygons[e]]
        proj = build_projection(geom, coords)
        projs.append(proj)
        ke = element_stiffness(proj, C, t, variant=variant)
        dofs = np.empty(2 * coords.shape[0], dtype=int)
        dofs[0::2] = 2 * mesh.polygons[e]
        dofs[1::2] = 2 * mesh.polygons[e] + 1
        K[np.ix_(dofs, dofs)] += ke

    u_exact = np.array([field(xy) for xy in mesh.vertices]).reshape(-1)
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    on_boundary = (
        np.isclose(mesh.vertices[:, 0], lo[0])
        | np.isclose(mesh.vertices[:, 0], hi[0])
        | np.isclose(mesh.vertices[:, 1], lo[1])
        | np.isclose(mesh.vertices[:, 1], hi[1])
    )
    fixed = np.repeat(on_boundary, 2)
    free = ~fixed
    u = u_exact.copy()
    if np.any(free):
        rhs = -K[np.ix_(free, fixed)] @ u_exact[fixed]
        u[free] = np.linalg.solve(K[np.ix_(free, free)], rhs)
    strains = []
    for e, proj in enumerate(projs):
        dofs = np.empty(2 * mesh.polygons[e].size, dtype=int)
        dofs[0::2] = 2 * mesh.polygons[e]
        dofs[1::2] = 2 * mesh.polygons[e] + 1
        strains.append(proj.B @ u[dofs])
    return u, u_exact, np.array(strains)


# ---------------------------------------------------------------------------
# 1D return-map oracle
# ---------------------------------------------------------------------------

def uniaxial_return_map_1d(E: float, sigma_y: float, H: float, strain_path):
    """Independent one-dimensional elastoplastic return map with linear
    isotropic hardening; returns the stress history."""
    eps_p, alpha = 0.0, 0.0
    stresses = []
    for eps in strain_path:
        sig_tr = E * (eps - eps_p)
        f = abs(sig_tr) - (sigma_y + H * alpha)
        if f > 0.0:
            dg = f / (E + H)
            eps_p += dg * np.sign(sig_tr)
            alpha += dg
            sig = E * (eps - eps_p)
        else:
            sig = sig_tr
        stresses.append(sig)
    return np.array(stresses)


# ---------------------------------------------------------------------------
# finite differences and displacement control
# ---------------------------------------------------------------------------

def fd_global_tangent(model: CorotModel, u: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of the full-space internal force."""
    n = u.size
    K = np.zeros((n, n))
    for j in range(n):
        up, um = u.copy(), u.copy()
        up[j] += h
        um[j] -= h
        K[:, j] = (model.internal_force(up) - model.internal_force(um)) / (2.0 * h)
    return K


def displacement_control(problem: Problem, model: CorotModel, control_values, tol=1e-9,
                         max_iter=40):
    """Drive the monitored dof through prescribed values, solving for the
    load factor along the way (limit-point oracle; independent of the
    arc-length path following)."""
    system = FESystem(model, problem)
    from polyvem.analysis import dof_index

    control = dof_index(*problem.monitor)
    cpos = int(np.nonzero(system.free == control)[0][0])
    u = np.zeros(system.n_free)
    lam = 0.0
    path = [(0.0, 0.0)]
    for target in control_values:
        for _ in range(max_iter):
            K, f_int, f_ext, trial = system.assemble(u, lam)
            g = f_int - lam * f_ext
            K = K.toarray()
            # bordered system: residual plus the control constraint
            res_c = u[cpos] - target
            if np.linalg.norm(g) <= tol * max(abs(lam) * np.linalg.norm(f_ext), 1e-9) and abs(
                res_c
            ) <= tol * max(abs(target), 1.0):
                break
            A = np.zeros((system.n_free + 1, system.n_free + 1))
            A[: system.n_free, : system.n_free] = K
            A[: system.n_free, -1] = -f_ext
            A[-1, cpos] = 1.0
            rhs = np.concatenate((-g, [-res_c]))
            sol = np.linalg.solve(A, rhs)
            u = u + sol[:-1]
            lam = lam + sol[-1]
        else:
            raise RuntimeError(f"displacement control failed at target {target}")
        system.commit(u, lam, trial)
        path.append((target, lam))
    return np.array(path)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])
