"""Run-configuration parsing and validation.

A run configuration is a single JSON object; unknown keys anywhere in the
tree are rejected with the offending key path so typos fail loudly instead
of silently falling back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import Constraint, PointLoad, Problem, SolverConfig
from .assembly import ElasticMaterial
from .materials import J2Params
from .mesh import PolyMesh, generate_mesh, load_mesh

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_dict"]


class ConfigError(Exception):
    """Malformed run configuration; message carries the key path."""


@dataclass
class RunConfig:
    """Validated run configuration ready to execute."""

    mesh: PolyMesh
    material: object             # ElasticMaterial | J2Params
    thickness: float
    constraints: list[Constraint]
    loads: list[PointLoad]
    monitor: tuple[int, str]
    solver: SolverConfig
    out_stride: int = 0
    units: str = ""
    source: str = ""

    def problem(self) -> Problem:
        return Problem(
            mesh=self.mesh,
            material=self.material,
            thickness=self.thickness,
            constraints=tuple(self.constraints),
            loads=tuple(self.loads),
            monitor=self.monitor,
        )


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _number(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}: missing required key '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    return float(val)


def _integer(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}: missing required key '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    return val


def _parse_mesh(block, base_dir: Path, path: str) -> PolyMesh:
    _check_keys(block, {"file", "generate"}, path)
    has_file = "file" in block
    has_gen = "generate" in block
    if has_file == has_gen:
        raise ConfigError(f"{path}: exactly one of 'file' or 'generate' is required")
    if has_file:
        mesh_path = Path(block["file"])
        if not mesh_path.is_absolute():
            mesh_path = base_dir / mesh_path
        return load_mesh(mesh_path)
    gen = block["generate"]
    if not isinstance(gen, dict):
        raise ConfigError(f"{path}.generate: expected an object")
    return generate_mesh(gen)


def _parse_material(block, path: str):
    _check_keys(block, {"model", "E", "nu", "plane", "sigma_yield", "E_h"}, path)
    model = _require(block, "model", path)
    E = _number(block, "E", path)
    nu = _number(block, "nu", path)
    plane = block.get("plane", "stress")
    if plane not in ("stress", "strain"):
        raise ConfigError(f"{path}.plane: expected 'stress' or 'strain', got {plane!r}")
    if model == "elastic":
        for key in ("sigma_yield", "E_h"):
            if key in block:
                raise ConfigError(f"{path}.{key}: only valid for the 'j2' model")
        return ElasticMaterial(E=E, nu=nu, plane=plane)
    if model == "j2":
        if plane != "stress":
            raise ConfigError(f"{path}.plane: the 'j2' model supports plane stress only")
        sigma_yield = _number(block, "sigma_yield", path)
        E_h = _number(block, "E_h", path, default=0.0)
        return J2Params(E=E, nu=nu, sigma_yield=sigma_yield, E_h=E_h)
    raise ConfigError(f"{path}.model: expected 'elastic' or 'j2', got {model!r}")


def _parse_constraints(block, path: str) -> list[Constraint]:
    if not isinstance(block, list) or not block:
        raise ConfigError(f"{path}: expected a non-empty list")
    out = []
    for i, item in enumerate(block):
        _check_keys(item, {"set", "dof"}, f"{path}[{i}]")
        out.append(Constraint(node_set=_require(item, "set", f"{path}[{i}]"),
                              dof=_require(item, "dof", f"{path}[{i}]")))
    return out


def _parse_loads(block, path: str) -> list[PointLoad]:
    if not isinstance(block, list) or not block:
        raise ConfigError(f"{path}: expected a non-empty list")
    out = []
    for i, item in enumerate(block):
        p = f"{path}[{i}]"
        _check_keys(item, {"set", "dof", "total"}, p)
        out.append(
            PointLoad(
                node_set=_require(item, "set", p),
                dof=_require(item, "dof", p),
                total=_number(item, "total", p),
            )
        )
    return out


_SOLVER_KEYS = {
    "dl", "steps", "tol", "tol_floor", "max_iter", "desired_iter", "psi",
    "grow_factor", "cut_factor", "max_cuts", "dl_max", "stability", "tau",
    "alpha0", "plastic_stab", "include_g1b", "stop_disp",
}


def _parse_solver(block, path: str) -> SolverConfig:
    _check_keys(block, _SOLVER_KEYS, path)
    stability = block.get("stability", "mengolini")
    if stability not in ("mengolini", "sukumar"):
        raise ConfigError(f"{path}.stability: expected 'mengolini' or 'sukumar', got {stability!r}")
    plastic_stab = block.get("plastic_stab", "tangent")
    if plastic_stab not in ("tangent", "elastic"):
        raise ConfigError(
            f"{path}.plastic_stab: expected 'tangent' or 'elastic', got {plastic_stab!r}"
        )
    include_g1b = block.get("include_g1b", True)
    if not isinstance(include_g1b, bool):
        raise ConfigError(f"{path}.include_g1b: expected a boolean")
    kwargs = dict(
        dl=_number(block, "dl", path, default=0.1),
        n_steps=_integer(block, "steps", path, default=10),
        psi=_number(block, "psi", path, default=0.0),
        tol=_number(block, "tol", path, default=1.0e-6),
        tol_floor=_number(block, "tol_floor", path, default=1.0e-12),
        max_iter=_integer(block, "max_iter", path, default=20),
        desired_iter=_integer(block, "desired_iter", path, default=5),
        grow_factor=_number(block, "grow_factor", path, default=1.2),
        cut_factor=_number(block, "cut_factor", path, default=0.5),
        max_cuts=_integer(block, "max_cuts", path, default=5),
        stability=stability,
        tau=_number(block, "tau", path, default=0.5),
        alpha0=_number(block, "alpha0", path, default=1.0),
        plastic_stab=plastic_stab,
        include_g1b=include_g1b,
    )
    if "dl_max" in block:
        kwargs["dl_max"] = _number(block, "dl_max", path)
    if "stop_disp" in block:
        kwargs["stop_disp"] = _number(block, "stop_disp", path)
    return SolverConfig(**kwargs)


_TOP_KEYS = {"mesh", "material", "thickness", "constraints", "loads", "monitor",
             "solver", "out_stride", "units"}


def parse_config_dict(data: dict, base_dir: Path | str = ".", source: str = "<dict>") -> RunConfig:
    """Validate a configuration object (see parse_config for the file form)."""
    base_dir = Path(base_dir)
    _check_keys(data, _TOP_KEYS, "config")
    mesh = _parse_mesh(_require(data, "mesh", "config"), base_dir, "config.mesh")
    material = _parse_material(_require(data, "material", "config"), "config.material")
    constraints = _parse_constraints(_require(data, "constraints", "config"), "config.constraints")
    loads = _parse_loads(_require(data, "loads", "config"), "config.loads")
    mon_block = _require(data, "monitor", "config")
    _check_keys(mon_block, {"node", "dof"}, "config.monitor")
    monitor = (
        _integer(mon_block, "node", "config.monitor"),
        _require(mon_block, "dof", "config.monitor"),
    )
    solver = _parse_solver(data.get("solver", {}), "config.solver")
    thickness = _number(data, "thickness", "config", default=1.0)
    out_stride = _integer(data, "out_stride", "config", default=0)
    units = data.get("units", "")
    if not isinstance(units, str):
        raise ConfigError("config.units: expected a string")
    return RunConfig(
        mesh=mesh,
        material=material,
        thickness=thickness,
        constraints=constraints,
        loads=loads,
        monitor=monitor,
        solver=solver,
        out_stride=out_stride,
        units=units,
        source=source,
    )


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration file."""
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from exc
    return parse_config_dict(data, base_dir=path.parent, source=str(path))
