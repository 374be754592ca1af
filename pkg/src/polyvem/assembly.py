"""Global assembly of the co-rotational VEM model.

Elements are grouped by vertex count so the whole trial pipeline (frame
angles, local displacements, constitutive update, tangent, internal force)
runs as stacked array operations per group.  The reference-geometry data
(projection B, stabilization operators, spin vectors, elastic stiffness) are
built once: with small local strains the element never changes shape in its
own frame, so they stay valid for the entire analysis.

Assembly is a pure trial evaluation: it reads the committed element states
(frame angles, plastic history) and returns new trial states without
touching them.  Commits happen only when the solver accepts a step.
Scatter uses fixed element ordering, so results are independent of any
evaluation batching.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import corotation as cr
from .materials import J2Params, radial_return_batch
from .mesh import PolyMesh, polygon_geometry, validate_mesh
from .vem import (
    ModularMatrix,
    build_projection,
    consistency_stiffness,
    elastic_moduli,
    stability_stiffness,
)

__all__ = [
    "ElasticMaterial",
    "StabilizationOptions",
    "ElementStates",
    "TrialStates",
    "CorotModel",
]


@dataclass(frozen=True)
class ElasticMaterial:
    """Linear elastic material for either plane case."""

    E: float
    nu: float
    plane: str = "stress"

    @property
    def moduli(self) -> ModularMatrix:
        return elastic_moduli(self.E, self.nu, self.plane)


@dataclass(frozen=True)
class StabilizationOptions:
    """Stabilization variant, parameters, and its treatment in plasticity.

    In plasticity the stabilization operator is rebuilt from the
    elasto-plastic moduli every iteration ("tangent", the default), so the
    stabilization softens together with the material.  Because those moduli
    are discontinuous across the yield surface, the stabilization force is
    accumulated incrementally, q_s += k_s(C_ep) * (d_loc - d_loc_committed),
    which keeps the internal force continuous to within one step increment
    and leaves equilibrium iterations quadratic.  "elastic" instead freezes
    the elastic stabilization operator (total form q_s = k_s d_loc); it is
    robust but adds artificial post-yield stiffness wherever the
    non-polynomial deformation keeps growing, e.g. through plastic hinges.
    """

    variant: str = "mengolini"
    tau: float = 0.5
    alpha0: float = 1.0
    plastic_stab: str = "tangent"  # "tangent" | "elastic"


@dataclass
class ElementStates:
    """Committed per-element state (mesh element order).

    stab_force and d_loc hold the accumulated stabilization force and the
    local displacements, stored per vertex-count group (list parallel to the
    model's groups) since their lengths vary with the polygon.
    """

    theta: np.ndarray             # (n_elem,)
    sigma: np.ndarray             # (n_elem, 3) local co-rotated stress
    eps_p: np.ndarray             # (n_elem, 3)
    alpha: np.ndarray             # (n_elem,)
    stab_force: list[np.ndarray]  # per group: (m, 2 n_v)
    d_loc: list[np.ndarray]       # per group: (m, 2 n_v)

    @classmethod
    def zeros(cls, n_elem: int, group_shapes: list[tuple[int, int]] = ()) -> "ElementStates":
        return cls(
            theta=np.zeros(n_elem),
            sigma=np.zeros((n_elem, 3)),
            eps_p=np.zeros((n_elem, 3)),
            alpha=np.zeros(n_elem),
            stab_force=[np.zeros(shape) for shape in group_shapes],
            d_loc=[np.zeros(shape) for shape in group_shapes],
        )

    def copy(self) -> "ElementStates":
        return ElementStates(
            self.theta.copy(),
            self.sigma.copy(),
            self.eps_p.copy(),
            self.alpha.copy(),
            [q.copy() for q in self.stab_force],
            [d.copy() for d in self.d_loc],
        )


# Trial states have the same layout; the alias documents intent.
TrialStates = ElementStates


@dataclass
class _Group:
    """Stacked reference data for all elements sharing one vertex count."""

    n_v: int
    elem_ids: np.ndarray     # (m,) indices into mesh element order
    dof_idx: np.ndarray      # (m, 2 n_v) global dof indices
    coords_ref: np.ndarray   # (m, n_v, 2)
    area: np.ndarray         # (m,)
    B: np.ndarray            # (m, 3, 2 n_v)
    stab: np.ndarray         # (m, 2 n_v, 2 n_v) I - Pi
    stab_gram: np.ndarray    # (m, 2 n_v, 2 n_v)
    a_ell: np.ndarray        # (m, 2 n_v)
    c_a: np.ndarray          # (m, 2 n_v)
    k_e: np.ndarray          # (m, 2 n_v, 2 n_v) elastic stiffness
    k_s_e: np.ndarray        # (m, 2 n_v, 2 n_v) elastic stabilization part
    rows: np.ndarray = field(repr=False, default=None)
    cols: np.ndarray = field(repr=False, default=None)


class CorotModel:
    """Co-rotational VEM structural model over a polygonal mesh.

    Args:
        mesh: validated polygonal mesh.
        material: ElasticMaterial or J2Params (plane-stress plasticity).
        thickness: uniform element thickness.
        stabilization: stabilization variant and parameters.
        include_g1b: keep the gradient-of-v term in the geometric stiffness.
    """

    def __init__(
        self,
        mesh: PolyMesh,
        material,
        thickness: float = 1.0,
        stabilization: StabilizationOptions | None = None,
        include_g1b: bool = True,
    ):
        report = validate_mesh(mesh)
        if report:
            raise ValueError("invalid mesh: " + "; ".join(report))
        if thickness <= 0.0:
            raise ValueError(f"thickness must be positive, got {thickness}")
        self.mesh = mesh
        self.material = material
        self.thickness = float(thickness)
        self.stabilization = stabilization or StabilizationOptions()
        self.include_g1b = include_g1b
        self.n_dof = 2 * mesh.n_nodes
        self.plastic = isinstance(material, J2Params)
        if self.plastic:
            self._elastic_C = material.C
        else:
            self._elastic_C = material.moduli.C

        self._groups = self._build_groups()
        self._group_shapes = [grp.dof_idx.shape for grp in self._groups]
        self.committed = ElementStates.zeros(mesh.n_elements, self._group_shapes)

    # -- construction -----------------------------------------------------

    def _build_groups(self) -> list[_Group]:
        mesh = self.mesh
        by_nv: dict[int, list[int]] = {}
        for e, poly in enumerate(mesh.polygons):
            by_nv.setdefault(poly.size, []).append(e)

        stab_opts = self.stabilization
        groups = []
        for n_v in sorted(by_nv):
            ids = np.array(by_nv[n_v], dtype=int)
            m = ids.size
            conn = np.stack([mesh.polygons[e] for e in ids])
            dof_idx = np.empty((m, 2 * n_v), dtype=int)
            dof_idx[:, 0::2] = 2 * conn
            dof_idx[:, 1::2] = 2 * conn + 1
            coords = mesh.vertices[conn]

            area = np.empty(m)
            B = np.empty((m, 3, 2 * n_v))
            stab = np.empty((m, 2 * n_v, 2 * n_v))
            stab_gram = np.empty_like(stab)
            a_ell = np.empty((m, 2 * n_v))
            c_a = np.empty_like(a_ell)
            k_e = np.empty_like(stab)
            k_s_e = np.empty_like(stab)
            for i, e in enumerate(ids):
                geom = polygon_geometry(mesh, e)
                proj = build_projection(geom, coords[i], elem_index=e)
                area[i] = geom.area
                B[i] = proj.B
                stab[i] = proj.stab
                stab_gram[i] = proj.stab_gram
                a_ell[i] = cr.spin_vector(proj)
                k_c_i = consistency_stiffness(proj, self._elastic_C, self.thickness)
                k_s_e[i] = stability_stiffness(
                    proj,
                    self._elastic_C,
                    k_c_i,
                    variant=stab_opts.variant,
                    tau=stab_opts.tau,
                    alpha0=stab_opts.alpha0,
                )
                k_e[i] = k_c_i + k_s_e[i]
            c_a = cr.spin_pair_rotate(a_ell)

            rows = np.repeat(dof_idx, 2 * n_v, axis=1).ravel()
            cols = np.tile(dof_idx, (1, 2 * n_v)).ravel()
            groups.append(
                _Group(
                    n_v=n_v,
                    elem_ids=ids,
                    dof_idx=dof_idx,
                    coords_ref=coords,
                    area=area,
                    B=B,
                    stab=stab,
                    stab_gram=stab_gram,
                    a_ell=a_ell,
                    c_a=c_a,
                    k_e=k_e,
                    k_s_e=k_s_e,
                    rows=rows,
                    cols=cols,
                )
            )
        return groups

    # -- trial assembly ----------------------------------------------------

    def assemble_full(
        self, u: np.ndarray, committed: ElementStates | None = None
    ) -> tuple[sp.csr_matrix, np.ndarray, TrialStates]:
        """Tangent stiffness, internal force and trial states at displacement u.

        Pure with respect to the committed states (defaults to the model's
        own).  Returns the full-space K (csr) and F_int plus the trial
        element states to commit on acceptance.
        """
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_dof,):
            raise ValueError(f"displacement vector must have length {self.n_dof}")
        committed = committed if committed is not None else self.committed

        f_int = np.zeros(self.n_dof)
        trial = TrialStates.zeros(self.mesh.n_elements, self._group_shapes)
        data_parts = []
        rows_parts = []
        cols_parts = []
        for gi, grp in enumerate(self._groups):
            k_t, q_glob = self._evaluate_group(gi, grp, u, committed, trial)
            data_parts.append(k_t.reshape(-1))
            rows_parts.append(grp.rows)
            cols_parts.append(grp.cols)
            np.add.at(f_int, grp.dof_idx, q_glob)

        K = sp.coo_matrix(
            (np.concatenate(data_parts), (np.concatenate(rows_parts), np.concatenate(cols_parts))),
            shape=(self.n_dof, self.n_dof),
        ).tocsr()
        return K, f_int, trial

    def internal_force(self, u: np.ndarray, committed: ElementStates | None = None) -> np.ndarray:
        """F_int alone (used by finite-difference tangent checks)."""
        committed = committed if committed is not None else self.committed
        u = np.asarray(u, dtype=float)
        f_int = np.zeros(self.n_dof)
        trial = TrialStates.zeros(self.mesh.n_elements, self._group_shapes)
        for gi, grp in enumerate(self._groups):
            _, q_glob = self._evaluate_group(gi, grp, u, committed, trial, need_tangent=False)
            np.add.at(f_int, grp.dof_idx, q_glob)
        return f_int

    def _evaluate_group(
        self,
        gi: int,
        grp: _Group,
        u: np.ndarray,
        committed: ElementStates,
        trial: TrialStates,
        need_tangent: bool = True,
    ):
        t = self.thickness
        ids = grp.elem_ids
        coords_cur = grp.coords_ref + u[grp.dof_idx].reshape(grp.coords_ref.shape)
        x_rel = coords_cur - coords_cur[:, :1, :]

        theta, a, b = cr.angles_batch(grp.a_ell, grp.c_a, x_rel, committed.theta[ids])
        Q = cr.q_batch(theta)
        x_loc = cr.local_coords_batch(Q, x_rel)
        x_loc_ref = grp.coords_ref - grp.coords_ref[:, :1, :]
        d_loc = (x_loc - x_loc_ref).reshape(x_loc.shape[0], -1)
        strain = np.einsum("nij,nj->ni", grp.B, d_loc)

        if self.plastic:
            sigma, C_ep, eps_p, alpha, _ = radial_return_batch(
                self.material, committed.eps_p[ids], committed.alpha[ids], strain
            )
            k_c = (t * grp.area)[:, None, None] * np.einsum(
                "nji,njk,nkl->nil", grp.B, C_ep, grp.B
            )
            q_loc = (t * grp.area)[:, None] * np.einsum("nji,nj->ni", grp.B, sigma)
            if self.stabilization.plastic_stab == "tangent":
                k_s = self._stability_batch(grp, C_ep, k_c)
                q_stab = committed.stab_force[gi] + np.einsum(
                    "nij,nj->ni", k_s, d_loc - committed.d_loc[gi]
                )
            else:
                k_s = grp.k_s_e
                q_stab = np.einsum("nij,nj->ni", k_s, d_loc)
            k_loc = k_c + k_s
            q_loc += q_stab
            trial.eps_p[ids] = eps_p
            trial.alpha[ids] = alpha
            trial.stab_force[gi] = q_stab
        else:
            sigma = strain @ self._elastic_C.T
            k_loc = grp.k_e
            q_loc = np.einsum("nij,nj->ni", grp.k_e, d_loc)
            trial.eps_p[ids] = 0.0
            trial.alpha[ids] = 0.0

        trial.theta[ids] = theta
        trial.sigma[ids] = sigma
        trial.d_loc[gi] = d_loc

        T, v, xhl = cr.transform_batch(grp.a_ell, grp.c_a, x_loc, Q, a, b)
        q_glob = np.einsum("nji,nj->ni", T, q_loc)
        if not need_tangent:
            return None, q_glob

        V = cr.v_gradient_batch(grp.a_ell, grp.c_a, a, b)
        k_sig = cr.geometric_stiffness_batch(
            q_loc, v, V, x_loc, xhl, Q, include_g1b=self.include_g1b
        )
        k_t = np.einsum("nji,njk,nkl->nil", T, k_loc, T) + k_sig
        return k_t, q_glob

    def _stability_batch(self, grp: _Group, C_ep: np.ndarray, k_c: np.ndarray) -> np.ndarray:
        opts = self.stabilization
        if opts.variant == "mengolini":
            tr_kc = np.einsum("nii->n", k_c)
            return opts.tau * tr_kc[:, None, None] * grp.stab_gram
        if opts.variant == "sukumar":
            floor = opts.alpha0 * np.einsum("nii->n", C_ep) / 3.0
            s_d = np.maximum(floor[:, None], np.einsum("nii->ni", k_c))
            return np.einsum("nji,nj,njk->nik", grp.stab, s_d, grp.stab)
        raise ValueError(f"unknown stability variant {opts.variant!r}")

    # -- state management --------------------------------------------------

    def commit(self, trial: TrialStates) -> None:
        self.committed = trial.copy()

    def elastic_stiffness(self) -> sp.csr_matrix:
        """Assembled small-strain elastic stiffness at the reference state."""
        K, _, _ = self.assemble_full(np.zeros(self.n_dof))
        return K
