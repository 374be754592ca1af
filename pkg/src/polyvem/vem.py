"""First-order virtual element projection and stiffness on a single polygon.

The element never evaluates its basis functions; everything is built from the
degrees of freedom through the projector onto the six scaled vector monomials

    p1 = (1, 0)       p2 = (0, 1)      p3 = (-eta, xi)
    p4 = (eta, xi)    p5 = (xi, 0)     p6 = (0, eta)

with xi = (x - xc)/h and eta = (y - yc)/h (element centroid xc, yc and
diameter h).  p1..p3 span the rigid modes; p4..p6 carry the three constant
strains.  The resulting strain-displacement matrix B holds the projected
shape-function gradients, constant over the polygon, and the element
stiffness splits into the rank-3 consistency part plus a stabilization term
acting only on the non-polynomial remainder.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .mesh import ElementGeometry

__all__ = [
    "ElementError",
    "MonomialBasis",
    "ModularMatrix",
    "ElementProjection",
    "elastic_moduli",
    "build_projection",
    "consistency_stiffness",
    "stability_stiffness",
    "element_stiffness",
    "recover_strain",
]

logger = logging.getLogger(__name__)

N_K = 6  # first-order vector monomial basis size, (k+1)(k+2) with k=1

# Condition number of G above which an element is reported as ill-conditioned.
COND_WARN = 1.0e12


class ElementError(Exception):
    """Element-level construction failure (degenerate or ill-posed polygon)."""


@dataclass(frozen=True)
class MonomialBasis:
    """Scaled monomial basis attached to one element's centroid and diameter."""

    centroid: np.ndarray
    diameter: float

    def scaled(self, points: np.ndarray) -> np.ndarray:
        """Map points (m, 2) to the scaled coordinates (xi, eta)."""
        return (np.asarray(points, dtype=float) - self.centroid) / self.diameter

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Evaluate all six vector monomials at points (m, 2) -> (m, 6, 2)."""
        sc = self.scaled(points)
        xi, eta = sc[:, 0], sc[:, 1]
        zero = np.zeros_like(xi)
        one = np.ones_like(xi)
        vals = np.stack(
            [
                np.stack([one, zero], axis=-1),
                np.stack([zero, one], axis=-1),
                np.stack([-eta, xi], axis=-1),
                np.stack([eta, xi], axis=-1),
                np.stack([xi, zero], axis=-1),
                np.stack([zero, eta], axis=-1),
            ],
            axis=1,
        )
        return vals

    def strain_matrix(self) -> np.ndarray:
        """Voigt strains of the basis, (3, 6): columns 1-3 vanish (rigid modes)."""
        h = self.diameter
        eps = np.zeros((3, N_K))
        eps[2, 3] = 2.0 / h   # p4 = (eta, xi): pure engineering shear
        eps[0, 4] = 1.0 / h   # p5 = (xi, 0):   unit x-stretch
        eps[1, 5] = 1.0 / h   # p6 = (0, eta):  unit y-stretch
        return eps


@dataclass(frozen=True)
class ModularMatrix:
    """Plane elastic modular matrix in Voigt form with its defining data."""

    C: np.ndarray   # (3, 3) symmetric
    plane: str      # "stress" | "strain"
    E: float
    nu: float


def elastic_moduli(E: float, nu: float, plane: str = "stress") -> ModularMatrix:
    """Isotropic plane-stress / plane-strain modular matrix.

    Raises:
        ValueError: modulus or Poisson ratio outside the admissible range
            (plane stress: -1 < nu < 1; plane strain: -1 < nu < 0.5).
    """
    if E <= 0.0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if plane == "stress":
        if not -1.0 < nu < 1.0:
            raise ValueError(f"plane stress requires -1 < nu < 1, got {nu}")
        C = (E / (1.0 - nu**2)) * np.array(
            [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]]
        )
    elif plane == "strain":
        if not -1.0 < nu < 0.5:
            raise ValueError(f"plane strain requires -1 < nu < 0.5, got {nu}")
        C = (E / ((1.0 + nu) * (1.0 - 2.0 * nu))) * np.array(
            [[1.0 - nu, nu, 0.0], [nu, 1.0 - nu, 0.0], [0.0, 0.0, 0.5 * (1.0 - 2.0 * nu)]]
        )
    else:
        raise ValueError(f"plane must be 'stress' or 'strain', got {plane!r}")
    return ModularMatrix(C=C, plane=plane, E=E, nu=nu)


def _as_c_matrix(C) -> np.ndarray:
    return C.C if isinstance(C, ModularMatrix) else np.asarray(C, dtype=float)


@dataclass(frozen=True)
class ElementProjection:
    """Projection matrices of one polygon (all in the element's frame).

    D maps monomial coefficients to nodal dof values; Pi_tilde is the
    projector onto monomial coefficients, Pi its nodal-space counterpart;
    B is the constant strain-displacement matrix.  stab = I - Pi and
    stab_gram = stab.T @ stab are cached for the stabilization terms.
    """

    geometry: ElementGeometry
    basis: MonomialBasis
    D: np.ndarray          # (2 n_v, 6)
    B_tilde: np.ndarray    # (6, 2 n_v)
    B_breve: np.ndarray    # (3, 2 n_v)
    B_bar: np.ndarray      # (6, 2 n_v)
    G: np.ndarray          # (6, 6)
    Pi_tilde: np.ndarray   # (6, 2 n_v)
    Pi: np.ndarray         # (2 n_v, 2 n_v)
    B: np.ndarray          # (3, 2 n_v)
    stab: np.ndarray       # (2 n_v, 2 n_v)  I - Pi
    stab_gram: np.ndarray  # (2 n_v, 2 n_v)  (I - Pi)^T (I - Pi)

    @property
    def n_v(self) -> int:
        return self.geometry.n_v

    @property
    def n_dof(self) -> int:
        return 2 * self.geometry.n_v


def build_projection(
    geom: ElementGeometry,
    vertex_coords: np.ndarray,
    C=None,
    elem_index: int | None = None,
) -> ElementProjection:
    """Assemble the first-order projection matrices for one polygon.

    The dof-evaluation matrix D holds the monomials sampled at the vertices.
    Rows of B_tilde come from the boundary integral of the monomial stress
    against each vertex's pair of adjacent edge normals (trailing edge j-1
    wraps to the last edge for the first vertex); its first three rows are
    replaced by the vertex-averaged rigid-mode rows B_breve to pin the
    projection's rigid part.  Then G = B_bar D, Pi_tilde = G^-1 B_bar,
    Pi = D Pi_tilde and B = eps(P) Pi_tilde.

    The modular matrix only mixes rows of the construction; the resulting
    projector and B are independent of it, so ``C`` defaults to the identity.

    Raises:
        ElementError: singular G (degenerate geometry), reporting the element
            index and a condition estimate.
    """
    coords = np.asarray(vertex_coords, dtype=float)
    n_v = coords.shape[0]
    basis = MonomialBasis(centroid=geom.centroid, diameter=geom.diameter)
    Cm = np.eye(3) if C is None else _as_c_matrix(C)

    # D: monomials evaluated at the vertex dofs (x rows even, y rows odd).
    vals = basis.eval(coords)                  # (n_v, 6, 2)
    D = np.empty((2 * n_v, N_K))
    D[0::2, :] = vals[:, :, 0]
    D[1::2, :] = vals[:, :, 1]

    # Edge-length weighted average normal at each vertex.
    ln = geom.edge_lengths[:, None] * geom.edge_normals          # (n_v, 2)
    wn = 0.5 * (np.roll(ln, 1, axis=0) + ln)                     # (n_v, 2)

    eps_p = basis.strain_matrix()              # (3, 6)
    sig_p = Cm @ eps_p                         # (3, 6) columns sigma(p_alpha)
    B_tilde = np.empty((N_K, 2 * n_v))
    for alpha in range(N_K):
        sx, sy, sxy = sig_p[:, alpha]
        S = np.array([[sx, sxy], [sxy, sy]])
        swn = wn @ S.T                          # (n_v, 2) rows S @ wn_j
        B_tilde[alpha, 0::2] = swn[:, 0]
        B_tilde[alpha, 1::2] = swn[:, 1]

    # B_breve: 1/n_v-weighted dof averages of the three rigid monomials.
    B_breve = D[:, :3].T / n_v

    B_bar = B_tilde.copy()
    B_bar[:3, :] = B_breve

    G = B_bar @ D
    cond = np.linalg.cond(G)
    label = "element" if elem_index is None else f"element {elem_index}"
    if not np.isfinite(cond):
        raise ElementError(f"{label}: singular projector system G (condition estimate inf)")
    if cond > COND_WARN:
        logger.warning("%s: ill-conditioned projector system G (cond %.3e)", label, cond)
    try:
        Pi_tilde = np.linalg.solve(G, B_bar)
    except np.linalg.LinAlgError as exc:
        raise ElementError(
            f"{label}: singular projector system G (condition estimate {cond:.3e})"
        ) from exc

    Pi = D @ Pi_tilde
    B = eps_p @ Pi_tilde
    stab = np.eye(2 * n_v) - Pi
    return ElementProjection(
        geometry=geom,
        basis=basis,
        D=D,
        B_tilde=B_tilde,
        B_breve=B_breve,
        B_bar=B_bar,
        G=G,
        Pi_tilde=Pi_tilde,
        Pi=Pi,
        B=B,
        stab=stab,
        stab_gram=stab.T @ stab,
    )


def consistency_stiffness(proj: ElementProjection, C, t: float) -> np.ndarray:
    """Rank-3 consistency stiffness t * A * B^T C B."""
    if t <= 0.0:
        raise ValueError(f"thickness must be positive, got {t}")
    Cm = _as_c_matrix(C)
    return t * proj.geometry.area * proj.B.T @ Cm @ proj.B


def stability_stiffness(
    proj: ElementProjection,
    C,
    k_c: np.ndarray,
    variant: str = "mengolini",
    tau: float = 0.5,
    alpha0: float = 1.0,
) -> np.ndarray:
    """Stabilization stiffness acting on the non-polynomial remainder.

    variant "mengolini": tau * tr(k_c) * (I-Pi)^T (I-Pi), default tau = 1/2.
    variant "sukumar":   (I-Pi)^T S_d (I-Pi) with diagonal
        S_d[i, i] = max(alpha0 * tr(C)/3, k_c[i, i]), default alpha0 = 1.
    Both annihilate the polynomial subspace (range of D).
    """
    if variant == "mengolini":
        if tau <= 0.0:
            raise ValueError(f"tau must be positive, got {tau}")
        return tau * np.trace(k_c) * proj.stab_gram
    if variant == "sukumar":
        if alpha0 <= 0.0:
            raise ValueError(f"alpha0 must be positive, got {alpha0}")
        Cm = _as_c_matrix(C)
        s_d = np.maximum(alpha0 * np.trace(Cm) / 3.0, np.diag(k_c))
        return (proj.stab.T * s_d) @ proj.stab
    raise ValueError(f"unknown stability variant {variant!r}")


def element_stiffness(
    proj: ElementProjection,
    C,
    t: float,
    variant: str = "mengolini",
    tau: float = 0.5,
    alpha0: float = 1.0,
) -> np.ndarray:
    """Full element stiffness k_E = k_c + k_s."""
    k_c = consistency_stiffness(proj, C, t)
    return k_c + stability_stiffness(proj, C, k_c, variant=variant, tau=tau, alpha0=alpha0)


def recover_strain(proj: ElementProjection, u_e: np.ndarray) -> np.ndarray:
    """Constant Voigt strain (eps_x, eps_y, gamma_xy) from element dofs."""
    u_e = np.asarray(u_e, dtype=float)
    if u_e.shape != (proj.n_dof,):
        raise ValueError(f"expected displacement vector of length {proj.n_dof}, got {u_e.shape}")
    return proj.B @ u_e
