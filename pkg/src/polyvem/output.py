"""Result emission: load-displacement CSV and legacy-VTK field files.

The CSV is the plottable source for load-displacement curves: one row per
accepted step, full-precision decimals (repr round trip).  Field files are
VTK legacy ASCII unstructured grids with the deformed geometry as points,
one polygon cell per element and the local co-rotated stresses plus the
equivalent plastic strain as cell data; optional extra arrays carry the
stresses rotated back to the global frame.
"""

from __future__ import annotations

import numpy as np

from .analysis import AnalysisResult, FieldSnapshot, dof_index
from .mesh import PolyMesh

__all__ = ["write_history_csv", "write_vtk_fields", "rotate_stress_to_global", "write_run_outputs"]

CSV_HEADER = "step,lambda,load,u_monitor_x,u_monitor_y"


def write_history_csv(result: AnalysisResult, path) -> None:
    """Write the per-step history table.

    The load column is lambda times the total reference load acting in the
    monitored direction.
    """
    if not result.history:
        raise ValueError("empty history")
    mon_dof = result.problem.monitor[1]
    total_ref = sum(load.total for load in result.problem.loads if load.dof == mon_dof)
    lines = [CSV_HEADER]
    for row in result.history:
        lam = float(row.lam)
        lines.append(
            f"{row.step},{lam!r},{lam * total_ref!r},"
            f"{float(row.monitor[0])!r},{float(row.monitor[1])!r}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def rotate_stress_to_global(sigma: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotate Voigt stresses from co-rotated element frames to global axes."""
    c, s = np.cos(theta), np.sin(theta)
    sx, sy, sxy = sigma[:, 0], sigma[:, 1], sigma[:, 2]
    gx = c * c * sx + s * s * sy - 2.0 * s * c * sxy
    gy = s * s * sx + c * c * sy + 2.0 * s * c * sxy
    gxy = s * c * (sx - sy) + (c * c - s * s) * sxy
    return np.column_stack((gx, gy, gxy))


def write_vtk_fields(
    mesh: PolyMesh,
    snapshot: FieldSnapshot,
    path,
    include_global_stress: bool = False,
) -> None:
    """Write one step's element fields on the deformed mesh (legacy VTK ASCII)."""
    n_elem = mesh.n_elements
    for name, arr in (("sigma", snapshot.sigma), ("alpha", snapshot.alpha)):
        if arr.shape[0] != n_elem:
            raise ValueError(f"{name} field sized {arr.shape[0]}, mesh has {n_elem} elements")
    deformed = mesh.vertices + snapshot.u.reshape(-1, 2)
    lines = [
        "# vtk DataFile Version 2.0",
        f"polyvem fields, step {snapshot.step}, lambda {float(snapshot.lam)!r}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in deformed:
        lines.append(f"{float(x)!r} {float(y)!r} 0.0")
    size = sum(p.size + 1 for p in mesh.polygons)
    lines.append(f"CELLS {n_elem} {size}")
    for poly in mesh.polygons:
        lines.append(str(poly.size) + " " + " ".join(str(int(i)) for i in poly))
    lines.append(f"CELL_TYPES {n_elem}")
    lines.extend(["7"] * n_elem)  # VTK_POLYGON
    lines.append(f"CELL_DATA {n_elem}")

    def scalar_array(name: str, values: np.ndarray):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(repr(float(v)) for v in values)

    scalar_array("sigma_x_local", snapshot.sigma[:, 0])
    scalar_array("sigma_y_local", snapshot.sigma[:, 1])
    scalar_array("sigma_xy_local", snapshot.sigma[:, 2])
    scalar_array("eq_plastic_strain", snapshot.alpha)
    if include_global_stress:
        sg = rotate_stress_to_global(snapshot.sigma, snapshot.theta)
        scalar_array("sigma_x_global", sg[:, 0])
        scalar_array("sigma_y_global", sg[:, 1])
        scalar_array("sigma_xy_global", sg[:, 2])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_run_outputs(result: AnalysisResult, out_dir, include_global_stress: bool = False):
    """Write steps.csv plus one VTK file per stored field snapshot."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_history_csv(result, out / "steps.csv")
    paths = [out / "steps.csv"]
    for snap in result.snapshots:
        p = out / f"fields_{snap.step:05d}.vtk"
        write_vtk_fields(result.problem.mesh, snap, p, include_global_stress)
        paths.append(p)
    return paths
