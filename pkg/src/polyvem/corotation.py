"""Per-element co-rotational kinematics and statics.

Each polygon carries a local frame attached to one of its nodes (the frame
node, first listed vertex by default).  The frame angle is the zero-spin
angle: the rotation that removes the skew part of the projected displacement
gradient at the element centroid, computed from the spin vector extracted
out of the element's strain-displacement matrix.  Local displacements are
what remains after rigid translation and rotation are filtered out, so the
small-strain element stiffness applies unchanged; the price is the
configuration-dependent transformation T between local and global dof
variations and the geometric (initial-stress) stiffness coming from its
variation.

All kernels are written over a leading batch axis (n elements at once); the
single-element API wraps batch size one.  The zero-spin equation determines
the angle only up to multiples of pi, so the angle is lifted to the branch
nearest the previously committed angle, which tracks rotations beyond +-90
degrees across committed steps as long as no single step rotates an element
by more than 90 degrees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vem import ElementProjection

__all__ = [
    "KinematicError",
    "CorotReference",
    "CorotFrame",
    "Transform",
    "spin_vector",
    "spin_pair_rotate",
    "make_reference",
    "corot_angle",
    "local_displacements",
    "transformation",
    "element_tangent",
    "internal_force",
]


class KinematicError(Exception):
    """Degenerate current configuration (element collapsed onto its frame node)."""


@dataclass(frozen=True)
class CorotReference:
    """Reference-configuration data of one element's co-rotational frame."""

    frame_node: int          # local index of the frame node
    x_rel_ref: np.ndarray    # (n_v, 2) reference offsets from the frame node
    x_loc_ref: np.ndarray    # (n_v, 2) reference local coordinates (frame at 0)
    a_ell: np.ndarray        # (2 n_v,) centroid spin vector
    c_a: np.ndarray          # (2 n_v,) 90-degree pair rotation of a_ell

    @property
    def n_v(self) -> int:
        return self.x_rel_ref.shape[0]


@dataclass(frozen=True)
class CorotFrame:
    """Current frame: zero-spin angle, orientation and the spin scalars."""

    theta: float
    Q: np.ndarray   # (2, 2) columns are the local basis vectors
    a: float
    b: float


@dataclass(frozen=True)
class Transform:
    """Local/global dof transformation and its angle-derivative data."""

    T: np.ndarray          # (2 n_v, 2 n_v)
    v: np.ndarray          # (2 n_v,) gradient of theta wrt global dofs
    V: np.ndarray          # (2 n_v, 2 n_v) symmetric gradient of v
    x_hat_loc: np.ndarray  # (2 n_v,) stacked (y_loc, -x_loc) pairs
    x_loc: np.ndarray      # (n_v, 2) current local coordinates


def spin_vector(proj: ElementProjection) -> np.ndarray:
    """Spin vector with node pairs (dphi_i/dY, -dphi_i/dX) read from B.

    The x-gradients sit in B row 1 at the x columns and the y-gradients in
    row 2 at the y columns; row 3 interleaves both and agrees with them by
    construction of the projection.
    """
    B = proj.B
    a = np.empty(proj.n_dof)
    a[0::2] = B[1, 1::2]    # dphi/dY
    a[1::2] = -B[0, 0::2]   # -dphi/dX
    return a


def spin_pair_rotate(a_ell: np.ndarray) -> np.ndarray:
    """Apply the blockwise 90-degree rotation pairing: (u, v) -> (-v, u)."""
    c = np.empty_like(a_ell)
    c[..., 0::2] = -a_ell[..., 1::2]
    c[..., 1::2] = a_ell[..., 0::2]
    return c


def make_reference(
    proj: ElementProjection, vertex_coords: np.ndarray, frame_node: int = 0
) -> CorotReference:
    """Build the frame reference data from the element's reference geometry."""
    coords = np.asarray(vertex_coords, dtype=float)
    a_ell = spin_vector(proj)
    x_rel = coords - coords[frame_node]
    return CorotReference(
        frame_node=frame_node,
        x_rel_ref=x_rel,
        x_loc_ref=x_rel.copy(),
        a_ell=a_ell,
        c_a=spin_pair_rotate(a_ell),
    )


# ---------------------------------------------------------------------------
# batched kernels (leading axis = elements)
# ---------------------------------------------------------------------------

def angles_batch(
    a_ell: np.ndarray, c_a: np.ndarray, x_rel: np.ndarray, theta_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zero-spin angles for stacked elements.

    Args:
        a_ell, c_a: (n, 2 n_v) spin vectors.
        x_rel: (n, n_v, 2) current offsets from each frame node.
        theta_prev: (n,) committed angles used for branch lifting.

    Returns:
        (theta, a, b) each (n,).
    """
    xhat = x_rel.reshape(x_rel.shape[0], -1)
    a = np.einsum("ni,ni->n", c_a, xhat)
    b = np.einsum("ni,ni->n", a_ell, xhat)
    r2 = a**2 + b**2
    scale = np.einsum("ni,ni->n", xhat, xhat) * np.einsum("ni,ni->n", a_ell, a_ell)
    bad = r2 <= 1e-28 * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise KinematicError(
            f"zero-spin angle undefined for elements {np.nonzero(bad)[0].tolist()} "
            "(configuration collapsed onto the frame node)"
        )
    theta = np.arctan2(-b, a)
    k = np.round((theta_prev - theta) / np.pi)
    return theta + k * np.pi, a, b


def q_batch(theta: np.ndarray) -> np.ndarray:
    """Frame orientation matrices (n, 2, 2) with columns (cos,sin), (-sin,cos)."""
    c, s = np.cos(theta), np.sin(theta)
    Q = np.empty(theta.shape + (2, 2))
    Q[..., 0, 0] = c
    Q[..., 1, 0] = s
    Q[..., 0, 1] = -s
    Q[..., 1, 1] = c
    return Q


def local_coords_batch(Q: np.ndarray, x_rel: np.ndarray) -> np.ndarray:
    """Current local coordinates Q^T x_rel, (n, n_v, 2)."""
    return np.einsum("nji,nvj->nvi", Q, x_rel)


def local_disp_batch(x_loc: np.ndarray, x_loc_ref: np.ndarray) -> np.ndarray:
    """Local displacement vectors stacked in dof order, (n, 2 n_v)."""
    d = x_loc - x_loc_ref
    return d.reshape(d.shape[0], -1)


def transform_batch(
    a_ell: np.ndarray,
    c_a: np.ndarray,
    x_loc: np.ndarray,
    Q: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """T, v and x_hat_loc for stacked elements.

    T = blockdiag(Q^T) + outer(x_hat_loc, v) with v = (b c_a - a a_ell)/(a^2+b^2).
    """
    n, n_v = x_loc.shape[0], x_loc.shape[1]
    r2 = a**2 + b**2
    v = (b[:, None] * c_a - a[:, None] * a_ell) / r2[:, None]
    xhl = np.empty((n, 2 * n_v))
    xhl[:, 0::2] = x_loc[:, :, 1]
    xhl[:, 1::2] = -x_loc[:, :, 0]
    T = np.zeros((n, 2 * n_v, 2 * n_v))
    QT = np.swapaxes(Q, 1, 2)
    for j in range(n_v):
        T[:, 2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = QT
    T += xhl[:, :, None] * v[:, None, :]
    return T, v, xhl


def v_gradient_batch(
    a_ell: np.ndarray, c_a: np.ndarray, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Symmetric gradient V of the theta-gradient vector v, (n, 2 n_v, 2 n_v)."""
    r4 = (a**2 + b**2) ** 2
    aa = a_ell[:, :, None] * a_ell[:, None, :]
    cc = c_a[:, :, None] * c_a[:, None, :]
    ca = c_a[:, :, None] * a_ell[:, None, :]
    ac = a_ell[:, :, None] * c_a[:, None, :]
    num = (2.0 * a * b)[:, None, None] * (aa - cc) + (a**2 - b**2)[:, None, None] * (ca + ac)
    return num / r4[:, None, None]


def geometric_stiffness_batch(
    q_loc: np.ndarray,
    v: np.ndarray,
    V: np.ndarray,
    x_loc: np.ndarray,
    x_hat_loc: np.ndarray,
    Q: np.ndarray,
    include_g1b: bool = True,
) -> np.ndarray:
    """Initial-stress stiffness sum_j q_loc[j] * G^j, (n, 2 n_v, 2 n_v).

    G for an x dof places the second frame vector at its node block; a y dof
    places the negated first vector.  Summed over dofs this contracts to
        w v^T + v w^T - (q.x_loc) v v^T + (q.x_hat_loc) V
    with w holding q_x e2' - q_y e1' at each node block; V enters only when
    include_g1b is set (the droppable gradient-of-v term).
    """
    n, n_v = x_loc.shape[0], x_loc.shape[1]
    e1 = Q[:, :, 0]
    e2 = Q[:, :, 1]
    qx = q_loc[:, 0::2]
    qy = q_loc[:, 1::2]
    w = np.empty_like(q_loc)
    w[:, 0::2] = qx * e2[:, None, 0] - qy * e1[:, None, 0]
    w[:, 1::2] = qx * e2[:, None, 1] - qy * e1[:, None, 1]
    q_dot_x = np.einsum("ni,ni->n", q_loc, x_loc.reshape(n, 2 * n_v))
    q_dot_xh = np.einsum("ni,ni->n", q_loc, x_hat_loc)
    k = (
        w[:, :, None] * v[:, None, :]
        + v[:, :, None] * w[:, None, :]
        - q_dot_x[:, None, None] * v[:, :, None] * v[:, None, :]
    )
    if include_g1b:
        k += q_dot_xh[:, None, None] * V
    return k


# ---------------------------------------------------------------------------
# single-element API
# ---------------------------------------------------------------------------

def corot_angle(ref: CorotReference, x_rel: np.ndarray, theta_prev: float = 0.0) -> CorotFrame:
    """Zero-spin frame for the current offsets, lifted near theta_prev."""
    theta, a, b = angles_batch(
        ref.a_ell[None, :],
        ref.c_a[None, :],
        np.asarray(x_rel, dtype=float)[None, :, :],
        np.array([theta_prev]),
    )
    return CorotFrame(theta=float(theta[0]), Q=q_batch(theta)[0], a=float(a[0]), b=float(b[0]))


def local_displacements(frame: CorotFrame, ref: CorotReference, x_rel: np.ndarray) -> np.ndarray:
    """Strain-producing local displacements Q^T x_rel - x_loc_ref, dof order."""
    x_loc = local_coords_batch(frame.Q[None], np.asarray(x_rel, dtype=float)[None])
    return local_disp_batch(x_loc, ref.x_loc_ref[None])[0]


def transformation(frame: CorotFrame, ref: CorotReference, x_rel: np.ndarray) -> Transform:
    """Transformation matrix T with its theta-gradient data."""
    x_rel = np.asarray(x_rel, dtype=float)
    x_loc = local_coords_batch(frame.Q[None], x_rel[None])
    a = np.array([frame.a])
    b = np.array([frame.b])
    T, v, xhl = transform_batch(
        ref.a_ell[None], ref.c_a[None], x_loc, frame.Q[None], a, b
    )
    V = v_gradient_batch(ref.a_ell[None], ref.c_a[None], a, b)
    return Transform(T=T[0], v=v[0], V=V[0], x_hat_loc=xhl[0], x_loc=x_loc[0])


def element_tangent(
    k_local: np.ndarray,
    q_local: np.ndarray,
    frame: CorotFrame,
    ref: CorotReference,
    x_rel: np.ndarray,
    include_g1b: bool = True,
) -> np.ndarray:
    """Global element tangent T^T k_local T plus the initial-stress term."""
    n_dof = 2 * ref.n_v
    if k_local.shape != (n_dof, n_dof):
        raise ValueError(f"local stiffness must be {(n_dof, n_dof)}, got {k_local.shape}")
    tr = transformation(frame, ref, x_rel)
    k_sigma = geometric_stiffness_batch(
        q_local[None],
        tr.v[None],
        tr.V[None],
        tr.x_loc[None],
        tr.x_hat_loc[None],
        frame.Q[None],
        include_g1b=include_g1b,
    )[0]
    return tr.T.T @ k_local @ tr.T + k_sigma


def internal_force(
    proj: ElementProjection,
    k_e: np.ndarray,
    d_loc: np.ndarray,
    transform: Transform,
    sigma: np.ndarray | None = None,
    k_s: np.ndarray | None = None,
    t: float = 1.0,
    variant: str = "elastic",
) -> tuple[np.ndarray, np.ndarray]:
    """Local and global internal force of one element.

    variant "elastic": q_loc = k_e d_loc.
    variant "plastic": q_loc = A t B^T sigma + k_s d_loc, taking the stress
        straight from the return map and correcting for the stabilization.
    """
    if variant == "elastic":
        q_loc = k_e @ d_loc
    elif variant == "plastic":
        if sigma is None or k_s is None:
            raise ValueError("plastic internal force needs sigma and k_s")
        q_loc = proj.geometry.area * t * proj.B.T @ sigma + k_s @ d_loc
    else:
        raise ValueError(f"unknown internal force variant {variant!r}")
    return q_loc, transform.T.T @ q_loc
