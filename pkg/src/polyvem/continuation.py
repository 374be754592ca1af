"""Arc-length path following (Crisfield-type, cylindrical by default).

The stepper operates on any "system" object exposing

    assemble(u, lam) -> (K, f_int, f_ext, trial)
    commit(u, lam, trial)

in the reduced (free-dof) space; K may be a scipy sparse matrix or a dense
array.  Each step runs a tangent predictor of radius dl followed by Newton
corrections constrained to the surface

    ||du||^2 + psi^2 dlam^2 ||f_ext||^2 = dl^2,

choosing the quadratic root whose updated increment stays closest in
direction to the current one.  Failed steps cut the radius in half and
retry; converged steps commit trial states and may grow the radius.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["ArcLengthConfig", "StepRecord", "PathError", "ArcLengthStepper"]

logger = logging.getLogger(__name__)

# A residual that stops improving is accepted if it sits within this factor of
# the tolerance: it has hit the floating-point floor of the assembly, which for
# small load factors can lie above tol * ||lam f_ext||.
_STAGNATION_SLACK = 1.0e3


class PathError(Exception):
    """Step failed after exhausting radius cuts; diagnostics in args."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass(frozen=True)
class ArcLengthConfig:
    """Arc-length control parameters.

    tol is relative to the external force level ||lam * f_ext|| with an
    absolute floor; psi = 0 gives the cylindrical constraint.  After a step
    converging in at most desired_iter iterations the radius grows by
    grow_factor (capped by dl_max); each failed attempt halves it, at most
    max_cuts times.
    """

    dl: float
    psi: float = 0.0
    n_steps: int = 1
    tol: float = 1.0e-6
    tol_floor: float = 1.0e-12
    max_iter: int = 20
    desired_iter: int = 5
    grow_factor: float = 1.2
    cut_factor: float = 0.5
    max_cuts: int = 5
    dl_max: float | None = None

    def __post_init__(self):
        if self.dl <= 0.0:
            raise ValueError(f"dl must be positive, got {self.dl}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass
class StepRecord:
    step: int
    lam: float
    u: np.ndarray
    n_iter: int
    dl: float
    n_cuts: int
    residual: float
    constraint_residual: float
    stagnated: bool = False
    trial: object = field(repr=False, default=None)


def _factor(K):
    if sp.issparse(K):
        lu = spla.splu(K.tocsc())
        return lu.solve
    K = np.asarray(K, dtype=float)
    return lambda rhs: np.linalg.solve(K, rhs)


class ArcLengthStepper:
    """Drives one system along its equilibrium path."""

    def __init__(self, system, config: ArcLengthConfig):
        self.system = system
        self.config = config
        self.dl = config.dl
        self.lam = 0.0
        self.u = np.zeros(system.n_free)
        self.du_prev: np.ndarray | None = None
        self.step_count = 0

    def step(self) -> StepRecord:
        """Advance one converged arc-length step (commits on success)."""
        cfg = self.config
        diagnostics = []
        for cut in range(cfg.max_cuts + 1):
            attempt = self._attempt(self.dl)
            if attempt is not None:
                du, dlam, n_iter, trial, res, con_res, stagnated = attempt
                self.u = self.u + du
                self.lam = float(self.lam + dlam)
                self.du_prev = du
                self.step_count += 1
                self.system.commit(self.u, self.lam, trial)
                record = StepRecord(
                    step=self.step_count,
                    lam=self.lam,
                    u=self.u.copy(),
                    n_iter=n_iter,
                    dl=self.dl,
                    n_cuts=cut,
                    residual=res,
                    constraint_residual=con_res,
                    stagnated=stagnated,
                    trial=trial,
                )
                if n_iter <= cfg.desired_iter:
                    grown = self.dl * cfg.grow_factor
                    self.dl = min(grown, cfg.dl_max) if cfg.dl_max else grown
                return record
            diagnostics.append(f"radius {self.dl:.3e} failed")
            self.dl *= cfg.cut_factor
        raise PathError(
            f"arc-length step {self.step_count + 1} failed after {cfg.max_cuts + 1} "
            f"attempts: " + "; ".join(diagnostics)
        )

    # -- internals ----------------------------------------------------------

    def _attempt(self, dl: float):
        cfg = self.config
        psi2 = cfg.psi**2

        K, f_int, f_ext, _ = self.system.assemble(self.u, self.lam)
        f2 = float(f_ext @ f_ext)
        if f2 == 0.0:
            raise PathError("external reference load is zero; nothing to follow")
        try:
            solve = _factor(K)
            du_t = solve(f_ext)
        except (RuntimeError, np.linalg.LinAlgError):
            return None

        denom = float(np.sqrt(float(du_t @ du_t) + psi2 * f2))
        sign = 1.0
        if self.du_prev is not None and float(du_t @ self.du_prev) < 0.0:
            sign = -1.0
        dlam = sign * dl / denom
        du = dlam * du_t

        prev_res = None
        stall = 0
        for it in range(cfg.max_iter + 1):
            K, f_int, f_ext, trial = self.system.assemble(self.u + du, self.lam + dlam)
            lam_new = self.lam + dlam
            g = f_int - lam_new * f_ext
            res = float(np.linalg.norm(g))
            ref = max(abs(lam_new) * float(np.linalg.norm(f_ext)), cfg.tol_floor)
            converged = res <= cfg.tol * ref
            stagnated = False
            if not converged and prev_res is not None and res > 0.5 * prev_res:
                stall += 1
                if stall >= 2 and res <= _STAGNATION_SLACK * cfg.tol * ref:
                    logger.warning(
                        "step %d: residual %.3e stagnated above tolerance %.3e; "
                        "accepting at the floating-point floor",
                        self.step_count + 1,
                        res,
                        cfg.tol * ref,
                    )
                    stagnated = True
            else:
                stall = 0
            prev_res = res
            if converged or stagnated:
                con_res = abs(float(du @ du) + psi2 * dlam**2 * f2 - dl**2)
                return du, dlam, it, trial, res, con_res, stagnated
            if it == cfg.max_iter:
                return None
            try:
                solve = _factor(K)
                du_g = solve(-g)
                du_t = solve(f_ext)
            except (RuntimeError, np.linalg.LinAlgError):
                return None
            dlam_corr = self._constraint_root(du, dlam, du_g, du_t, f2, dl)
            if dlam_corr is None:
                return None
            du = du + du_g + dlam_corr * du_t
            dlam = dlam + dlam_corr
        return None

    def _constraint_root(self, du, dlam, du_g, du_t, f2, dl):
        """Corrector load increment from the quadratic constraint.

        Picks the real root maximizing the cosine between the updated and
        current step increments; complex roots fall back to the linearized
        constraint, and a degenerate linearization signals failure (None).
        """
        psi2 = self.config.psi**2
        w = du + du_g
        a = float(du_t @ du_t) + psi2 * f2
        b = 2.0 * (float(w @ du_t) + psi2 * dlam * f2)
        c = float(w @ w) + psi2 * dlam**2 * f2 - dl**2

        if a == 0.0:
            return -c / b if b != 0.0 else None
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return -c / b if b != 0.0 else None
        sq = np.sqrt(disc)
        q = -0.5 * (b + np.copysign(sq, b)) if b != 0.0 else -0.5 * sq
        r1 = q / a
        r2 = c / q if q != 0.0 else r1

        best, best_cos = None, -np.inf
        for r in (float(r1), float(r2)):
            new = w + r * du_t
            norm = float(np.linalg.norm(new))
            if norm == 0.0:
                cos = 0.0
            else:
                cos = float(new @ du) / norm
            if cos > best_cos:
                best, best_cos = r, cos
        return best
