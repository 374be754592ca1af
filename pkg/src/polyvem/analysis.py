"""Problem definition and the nonlinear analysis driver.

A Problem ties a mesh to a material, homogeneous constraints (fixed zero
displacements on node sets), dead point loads (a total reference magnitude
split equally over a node set) and a monitored node for load-displacement
history.  run_analysis walks the equilibrium path with arc-length control,
committing element states at every accepted step and recording per-step
history plus optional element-field snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import CorotModel, ElasticMaterial, StabilizationOptions
from .continuation import ArcLengthConfig, ArcLengthStepper, PathError, StepRecord
from .materials import J2Params
from .mesh import PolyMesh

__all__ = [
    "ProblemError",
    "Constraint",
    "PointLoad",
    "Problem",
    "SolverConfig",
    "HistoryRow",
    "FieldSnapshot",
    "AnalysisResult",
    "dof_index",
    "build_external_force",
    "free_dof_indices",
    "apply_constraints",
    "run_analysis",
]

_DOF_NAMES = {"x": 0, "y": 1}


class ProblemError(Exception):
    """Inconsistent problem definition."""


@dataclass(frozen=True)
class Constraint:
    node_set: str
    dof: str  # "x" | "y"


@dataclass(frozen=True)
class PointLoad:
    node_set: str
    dof: str
    total: float  # reference magnitude, split equally over the set


@dataclass(frozen=True)
class Problem:
    mesh: PolyMesh
    material: object               # ElasticMaterial | J2Params
    thickness: float
    constraints: tuple[Constraint, ...]
    loads: tuple[PointLoad, ...]
    monitor: tuple[int, str]       # (node index, "x"|"y")

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "loads", tuple(self.loads))
        validate_problem(self)


@dataclass(frozen=True)
class SolverConfig:
    """Arc-length, tolerance and element options for one analysis."""

    dl: float
    n_steps: int
    psi: float = 0.0
    tol: float = 1.0e-6
    tol_floor: float = 1.0e-12
    max_iter: int = 20
    desired_iter: int = 5
    grow_factor: float = 1.2
    cut_factor: float = 0.5
    max_cuts: int = 5
    dl_max: float | None = None
    stability: str = "mengolini"
    tau: float = 0.5
    alpha0: float = 1.0
    plastic_stab: str = "tangent"    # see StabilizationOptions
    include_g1b: bool = True
    stop_disp: float | None = None   # stop once |monitored displacement| passes this

    def arc_config(self) -> ArcLengthConfig:
        return ArcLengthConfig(
            dl=self.dl,
            psi=self.psi,
            n_steps=self.n_steps,
            tol=self.tol,
            tol_floor=self.tol_floor,
            max_iter=self.max_iter,
            desired_iter=self.desired_iter,
            grow_factor=self.grow_factor,
            cut_factor=self.cut_factor,
            max_cuts=self.max_cuts,
            dl_max=self.dl_max,
        )

    def stabilization(self) -> StabilizationOptions:
        return StabilizationOptions(
            variant=self.stability,
            tau=self.tau,
            alpha0=self.alpha0,
            plastic_stab=self.plastic_stab,
        )


def dof_index(node: int, dof: str) -> int:
    return 2 * node + _DOF_NAMES[dof]


def _set_dofs(mesh: PolyMesh, set_name: str, dof: str) -> np.ndarray:
    if set_name not in mesh.node_sets:
        raise ProblemError(f"unknown node set '{set_name}'")
    if dof not in _DOF_NAMES:
        raise ProblemError(f"dof must be 'x' or 'y', got {dof!r}")
    return 2 * mesh.node_sets[set_name] + _DOF_NAMES[dof]


def validate_problem(problem: Problem) -> None:
    mesh = problem.mesh
    if problem.thickness <= 0.0:
        raise ProblemError(f"thickness must be positive, got {problem.thickness}")
    if not isinstance(problem.material, (ElasticMaterial, J2Params)):
        raise ProblemError(f"unsupported material {type(problem.material).__name__}")
    fixed = set()
    for con in problem.constraints:
        fixed.update(_set_dofs(mesh, con.node_set, con.dof).tolist())
    if len(fixed) < 3:
        raise ProblemError(
            f"at least 3 constrained dofs are required to remove rigid modes, got {len(fixed)}"
        )
    loaded = set()
    for load in problem.loads:
        loaded.update(_set_dofs(mesh, load.node_set, load.dof).tolist())
    overlap = fixed & loaded
    if overlap:
        raise ProblemError(f"constrained and loaded dofs overlap: {sorted(overlap)[:8]}")
    node, dof = problem.monitor
    if not (0 <= node < mesh.n_nodes):
        raise ProblemError(f"monitor node {node} out of range")
    if dof not in _DOF_NAMES:
        raise ProblemError(f"monitor dof must be 'x' or 'y', got {dof!r}")


def build_external_force(problem: Problem) -> np.ndarray:
    """Reference external force: each load's total split equally over its set."""
    f = np.zeros(2 * problem.mesh.n_nodes)
    for load in problem.loads:
        dofs = _set_dofs(problem.mesh, load.node_set, load.dof)
        f[dofs] += load.total / dofs.size
    return f


def free_dof_indices(problem: Problem) -> np.ndarray:
    fixed = np.zeros(2 * problem.mesh.n_nodes, dtype=bool)
    for con in problem.constraints:
        fixed[_set_dofs(problem.mesh, con.node_set, con.dof)] = True
    free = np.nonzero(~fixed)[0]
    if free.size == 0:
        raise ProblemError("all dofs are constrained; nothing to solve")
    return free


def apply_constraints(K: sp.spmatrix, g: np.ndarray, free: np.ndarray):
    """Row/column reduction to the free dofs (fixed values are zero)."""
    return K[free, :][:, free], g[free]


class FESystem:
    """Adapter presenting a CorotModel to the arc-length stepper in free space."""

    def __init__(self, model: CorotModel, problem: Problem):
        self.model = model
        self.free = free_dof_indices(problem)
        self.f_ext_full = build_external_force(problem)
        self.f_ext = self.f_ext_full[self.free]

    @property
    def n_free(self) -> int:
        return self.free.size

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        u = np.zeros(self.model.n_dof)
        u[self.free] = u_free
        return u

    def assemble(self, u_free: np.ndarray, lam: float):
        K, f_int, trial = self.model.assemble_full(self.expand(u_free))
        K_ff, f_int_f = apply_constraints(K, f_int, self.free)
        return K_ff, f_int_f, self.f_ext, trial

    def commit(self, u_free: np.ndarray, lam: float, trial) -> None:
        self.model.commit(trial)

    def reactions(self, u_free: np.ndarray) -> np.ndarray:
        """Full internal-force vector; constrained entries are the reactions."""
        return self.model.internal_force(self.expand(u_free))


@dataclass
class HistoryRow:
    step: int
    lam: float
    u: np.ndarray          # full-space displacements
    monitor: np.ndarray    # (2,) monitored node displacement (x, y)
    n_iter: int = 0
    dl: float = 0.0
    constraint_residual: float = 0.0


@dataclass
class FieldSnapshot:
    step: int
    lam: float
    u: np.ndarray
    sigma: np.ndarray      # (n_elem, 3) local co-rotated stresses
    alpha: np.ndarray      # (n_elem,) equivalent plastic strain
    theta: np.ndarray      # (n_elem,) frame angles


@dataclass
class AnalysisResult:
    problem: Problem
    history: list[HistoryRow] = field(default_factory=list)
    snapshots: list[FieldSnapshot] = field(default_factory=list)
    model: CorotModel | None = None

    @property
    def lam(self) -> np.ndarray:
        return np.array([row.lam for row in self.history])

    def monitor_disp(self, dof: str | None = None) -> np.ndarray:
        comp = _DOF_NAMES[dof if dof is not None else self.problem.monitor[1]]
        return np.array([row.monitor[comp] for row in self.history])


def run_analysis(
    problem: Problem, config: SolverConfig, field_stride: int = 0
) -> AnalysisResult:
    """Execute the arc-length path and collect history (and field snapshots).

    field_stride > 0 stores element fields every that many accepted steps
    (plus the initial and final states).  A path failure propagates as
    PathError with the partial history attached.
    """
    model = CorotModel(
        problem.mesh,
        problem.material,
        thickness=problem.thickness,
        stabilization=config.stabilization(),
        include_g1b=config.include_g1b,
    )
    system = FESystem(model, problem)
    stepper = ArcLengthStepper(system, config.arc_config())
    mon = dof_index(*problem.monitor)

    result = AnalysisResult(problem=problem, model=model)
    u0 = np.zeros(model.n_dof)
    result.history.append(HistoryRow(step=0, lam=0.0, u=u0, monitor=np.zeros(2)))
    if field_stride > 0:
        result.snapshots.append(_snapshot(model, 0, 0.0, u0))

    for k in range(1, config.n_steps + 1):
        try:
            rec: StepRecord = stepper.step()
        except PathError as exc:
            exc.history = result.history
            raise
        u_full = system.expand(rec.u)
        node = problem.monitor[0]
        result.history.append(
            HistoryRow(
                step=k,
                lam=rec.lam,
                u=u_full,
                monitor=u_full[2 * node : 2 * node + 2].copy(),
                n_iter=rec.n_iter,
                dl=rec.dl,
                constraint_residual=rec.constraint_residual,
            )
        )
        last = field_stride > 0 and (k % field_stride == 0 or k == config.n_steps)
        stopping = config.stop_disp is not None and abs(u_full[mon]) >= config.stop_disp
        if last or (field_stride > 0 and stopping):
            result.snapshots.append(_snapshot(model, k, rec.lam, u_full))
        if stopping:
            break
    return result


def _snapshot(model: CorotModel, step: int, lam: float, u: np.ndarray) -> FieldSnapshot:
    st = model.committed
    return FieldSnapshot(
        step=step,
        lam=lam,
        u=u.copy(),
        sigma=st.sigma.copy(),
        alpha=st.alpha.copy(),
        theta=st.theta.copy(),
    )
