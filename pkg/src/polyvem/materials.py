"""Constitutive models: linear elasticity and plane-stress J2 plasticity.

The return map enforces the plane-stress condition inside the update by
working with the in-plane stress modes that simultaneously diagonalize the
elastic matrix and the deviatoric projector:

    trace mode   (1, 1, 0):  elastic  E/(1-nu), projector 1/3
    tension-
    compression  (1,-1, 0):  elastic  2G,       projector 1
    shear        (0, 0, 1):  elastic  G,        projector 2

so the relaxed stress under a plastic multiplier dg is a per-mode scaling of
the trial stress, and plastic consistency reduces to one scalar equation
R(dg) = eta^2(dg)/2 - K^2(alpha(dg))/3 = 0 solved by Newton (eta^2 = s^T P s,
K = sigma_yield + E_h * alpha).  The algorithmically consistent tangent is

    C_ep = Xi - (Xi n)(Xi n)^T / (n^T Xi n + beta),   n = P sigma,

with Xi = (C^-1 + dg P)^-1 and beta the hardening contribution.

States are value objects; a return-map call never mutates its input state, so
equilibrium iterations can re-trial from the committed step freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vem import elastic_moduli

__all__ = [
    "ConstitutiveError",
    "J2Params",
    "MaterialState",
    "ReturnMapResult",
    "initial_state",
    "yield_function",
    "radial_return_plane_stress",
    "radial_return_batch",
]

SQ23 = np.sqrt(2.0 / 3.0)

# Voigt deviatoric projector for plane stress (engineering shear convention).
P_MATRIX = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 6.0]]) / 3.0

_NEWTON_RTOL = 1.0e-10
_NEWTON_MAXIT = 50


class ConstitutiveError(Exception):
    """Return-map failure (consistency Newton did not converge)."""


@dataclass(frozen=True)
class J2Params:
    """Plane-stress J2 material with linear isotropic hardening."""

    E: float
    nu: float
    sigma_yield: float
    E_h: float = 0.0

    def __post_init__(self):
        if self.E <= 0.0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not -1.0 < self.nu < 1.0:
            raise ValueError(f"plane stress requires -1 < nu < 1, got {self.nu}")
        if self.sigma_yield <= 0.0:
            raise ValueError(f"sigma_yield must be positive, got {self.sigma_yield}")
        if self.E_h < 0.0:
            raise ValueError(f"E_h must be non-negative, got {self.E_h}")

    @property
    def shear_modulus(self) -> float:
        return 0.5 * self.E / (1.0 + self.nu)

    @property
    def C(self) -> np.ndarray:
        return elastic_moduli(self.E, self.nu, "stress").C


@dataclass(frozen=True)
class MaterialState:
    """Committed point state: stress, plastic strain, equivalent plastic strain."""

    stress: np.ndarray          # (3,) Voigt
    plastic_strain: np.ndarray  # (3,) Voigt, engineering shear
    alpha: float = 0.0


@dataclass(frozen=True)
class ReturnMapResult:
    stress: np.ndarray     # (3,)
    C_ep: np.ndarray       # (3, 3) algorithmically consistent tangent
    state: MaterialState   # trial-updated state (commit on global convergence)
    dgamma: float


def initial_state() -> MaterialState:
    return MaterialState(stress=np.zeros(3), plastic_strain=np.zeros(3), alpha=0.0)


def yield_function(params: J2Params, sigma: np.ndarray, alpha: float) -> float:
    """Von Mises effective stress minus the current yield radius (stress units)."""
    sigma = np.asarray(sigma, dtype=float)
    eta2 = sigma @ P_MATRIX @ sigma
    return float(np.sqrt(1.5 * max(eta2, 0.0)) - (params.sigma_yield + params.E_h * alpha))


def _mode_split(sig: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trace / tension-compression / shear components of stacked stresses (n, 3)."""
    return sig[:, 0] + sig[:, 1], sig[:, 0] - sig[:, 1], sig[:, 2]


def radial_return_batch(
    params: J2Params,
    eps_p_n: np.ndarray,
    alpha_n: np.ndarray,
    strain: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized plane-stress radial return over n points.

    Args:
        eps_p_n: committed plastic strains, (n, 3).
        alpha_n: committed equivalent plastic strains, (n,).
        strain: total strains to evaluate, (n, 3).

    Returns:
        (sigma, C_ep, eps_p, alpha, dgamma) with shapes
        (n, 3), (n, 3, 3), (n, 3), (n,), (n,).

    Raises:
        ConstitutiveError: some point's consistency Newton (with bisection
            fallback) failed; the message carries the residual history.
    """
    eps_p_n = np.atleast_2d(np.asarray(eps_p_n, dtype=float))
    strain = np.atleast_2d(np.asarray(strain, dtype=float))
    alpha_n = np.atleast_1d(np.asarray(alpha_n, dtype=float))
    n = strain.shape[0]

    E, nu, sy, Eh = params.E, params.nu, params.sigma_yield, params.E_h
    G = params.shear_modulus
    C = params.C
    # per-mode elastic stiffness times projector eigenvalue
    A1 = E / (3.0 * (1.0 - nu))
    A2 = 2.0 * G

    # explicit products keep results bit-identical for any batch shape
    e = strain - eps_p_n
    c0, c1 = C[0, 0], C[0, 1]
    sig_tr = np.column_stack(
        (c0 * e[:, 0] + c1 * e[:, 1], c1 * e[:, 0] + c0 * e[:, 1], C[2, 2] * e[:, 2])
    )
    s_tr, d_tr, t_tr = _mode_split(sig_tr)
    q1 = s_tr**2 / 6.0
    q2 = 0.5 * d_tr**2 + 2.0 * t_tr**2
    eta2_tr = q1 + q2
    K_n = sy + Eh * alpha_n
    f_tr = 0.5 * eta2_tr - K_n**2 / 3.0

    sigma = sig_tr.copy()
    C_ep = np.broadcast_to(C, (n, 3, 3)).copy()
    eps_p = eps_p_n.copy()
    alpha = alpha_n.copy()
    dgamma = np.zeros(n)

    plastic = f_tr > 0.0
    if not np.any(plastic):
        return sigma, C_ep, eps_p, alpha, dgamma

    idx = np.nonzero(plastic)[0]
    dg = _solve_consistency(q1[idx], q2[idx], alpha_n[idx], A1, A2, sy, Eh, K_n[idx])

    # relaxed stress by per-mode scaling of the trial state
    r1 = 1.0 / (1.0 + dg * A1)
    r2 = 1.0 / (1.0 + dg * A2)
    s = s_tr[idx] * r1
    d = d_tr[idx] * r2
    t = t_tr[idx] * r2
    sig_new = np.column_stack((0.5 * (s + d), 0.5 * (s - d), t))
    eta2 = q1[idx] * r1**2 + q2[idx] * r2**2
    eta = np.sqrt(eta2)
    a_new = alpha_n[idx] + dg * SQ23 * eta

    nvec = np.column_stack(
        (
            (2.0 * sig_new[:, 0] - sig_new[:, 1]) / 3.0,
            (2.0 * sig_new[:, 1] - sig_new[:, 0]) / 3.0,
            2.0 * sig_new[:, 2],
        )
    )
    eps_p[idx] = eps_p_n[idx] + dg[:, None] * nvec
    alpha[idx] = a_new
    sigma[idx] = sig_new
    dgamma[idx] = dg

    C_ep[idx] = _consistent_tangent(params, dg, sig_new, a_new, eta, nvec)
    return sigma, C_ep, eps_p, alpha, dgamma


def _consistency_residual(dg, q1, q2, alpha_n, A1, A2, sy, Eh):
    """R(dg) and R'(dg) for the scalar plastic-consistency equation."""
    r1 = 1.0 / (1.0 + dg * A1)
    r2 = 1.0 / (1.0 + dg * A2)
    eta2 = q1 * r1**2 + q2 * r2**2
    eta = np.sqrt(eta2)
    deta2 = -2.0 * (A1 * q1 * r1**3 + A2 * q2 * r2**3)
    alpha = alpha_n + dg * SQ23 * eta
    K = sy + Eh * alpha
    R = 0.5 * eta2 - K**2 / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        deta = np.where(eta > 0.0, 0.5 * deta2 / eta, 0.0)
    dalpha = SQ23 * (eta + dg * deta)
    dR = 0.5 * deta2 - (2.0 / 3.0) * K * Eh * dalpha
    return R, dR


def _solve_consistency(q1, q2, alpha_n, A1, A2, sy, Eh, K_n):
    """Newton (bisection fallback) for the plastic multiplier, vectorized.

    The residual tolerance scales with the yield level squared (the residual
    is quadratic in stress), making the admissibility error on the effective
    stress a fixed fraction of the yield stress regardless of overshoot.
    """
    dg = np.zeros_like(q1)
    tol = _NEWTON_RTOL * np.maximum(K_n, sy) ** 2 / 3.0
    history = []
    ok = np.zeros(dg.shape, dtype=bool)
    for _ in range(_NEWTON_MAXIT):
        R, dR = _consistency_residual(dg, q1, q2, alpha_n, A1, A2, sy, Eh)
        history.append(float(np.max(np.abs(R))))
        ok = np.abs(R) <= tol
        if np.all(ok):
            return dg
        step = np.where(ok, 0.0, R / dR)
        bad = ~np.isfinite(step)
        dg = dg - np.where(bad, 0.0, step)
        np.clip(dg, 0.0, None, out=dg)
        if np.any(bad & ~ok):
            break

    # Per-point bisection for stragglers; R(0) > 0 and R is decreasing toward
    # the (unique) root, so expand the bracket until R < 0.
    for i in np.nonzero(~ok)[0]:
        lo, hi = 0.0, (np.sqrt(q1[i] + q2[i]) + sy) / max(A2, A1)
        for _ in range(200):
            R_hi, _ = _consistency_residual(hi, q1[i], q2[i], alpha_n[i], A1, A2, sy, Eh)
            if R_hi < 0.0:
                break
            hi *= 2.0
        else:
            raise ConstitutiveError(
                f"consistency bracket expansion failed; residual history {history}"
            )
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            R_m, _ = _consistency_residual(mid, q1[i], q2[i], alpha_n[i], A1, A2, sy, Eh)
            if abs(R_m) <= tol[i]:
                break
            if R_m > 0.0:
                lo = mid
            else:
                hi = mid
        else:
            raise ConstitutiveError(
                f"consistency bisection failed to converge; residual history {history}"
            )
        dg[i] = mid
    return dg


def _consistent_tangent(params, dg, sigma, alpha, eta, nvec):
    """C_ep = Xi - (Xi n)(Xi n)^T / (n^T Xi n + beta), batched (m, 3, 3)."""
    E, nu, Eh, sy = params.E, params.nu, params.E_h, params.sigma_yield
    G = params.shear_modulus

    xi1 = 1.0 / ((1.0 - nu) / E + dg / 3.0)
    xi2 = 1.0 / (1.0 / (2.0 * G) + dg)
    xi3 = 1.0 / (1.0 / G + 2.0 * dg)

    m1 = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    m2 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    m3 = np.array([0.0, 0.0, 1.0])
    Xi = (
        xi1[:, None, None] * np.outer(m1, m1)
        + xi2[:, None, None] * np.outer(m2, m2)
        + xi3[:, None, None] * np.outer(m3, m3)
    )

    Xn = np.einsum("mij,mj->mi", Xi, nvec)
    nXn = np.einsum("mi,mi->m", nvec, Xn)
    K = sy + Eh * alpha
    theta1 = 1.0 - (2.0 / 3.0) * K * Eh * dg * SQ23 / eta
    theta2 = (2.0 / 3.0) * K * Eh * SQ23 * eta
    beta = theta2 / theta1
    return Xi - Xn[:, :, None] * Xn[:, None, :] / (nXn + beta)[:, None, None]


def radial_return_plane_stress(
    params: J2Params, state_n: MaterialState, strain: np.ndarray
) -> ReturnMapResult:
    """Single-point return map from a committed state (no mutation of inputs)."""
    strain = np.asarray(strain, dtype=float)
    sigma, C_ep, eps_p, alpha, dgamma = radial_return_batch(
        params,
        state_n.plastic_strain[None, :],
        np.array([state_n.alpha]),
        strain[None, :],
    )
    new_state = MaterialState(stress=sigma[0], plastic_strain=eps_p[0], alpha=float(alpha[0]))
    return ReturnMapResult(stress=sigma[0], C_ep=C_ep[0], state=new_state, dgamma=float(dgamma[0]))
