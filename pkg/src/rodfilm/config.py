"""Experiment configuration: one YAML file with problem/solver/output blocks.

Parsing is strict: unknown keys fail with their full field path, values are
type-checked, and a parsed config re-serializes to an equivalent document
(defaults applied, key order fixed).
"""

import numpy as np
import yaml

from . import presets
from .energy import AnisotropicIntegrand, ElasticModel, EnergyModels, MassModel
from .errors import ConfigError
from .rod import CurvatureField, InitialFrame
from .sections import CrossSectionProfile, DiskSection, PolygonSection
from .solver import SolveConfig
from .system import Rod, RodSystem

_SOLVER_KEYS = (
    "max_outer_iters", "film_iters", "rod_iters", "film_step", "rod_step",
    "backtrack", "energy_tolerance", "film_grad_tol", "rod_grad_tol",
    "rod_fd_rel", "rollback_budget", "pos_tol", "dir_tol", "mc_samples",
    "mc_max_samples", "c5_slack", "attachment", "constraint_mode",
    "eps_sweep", "seed",
)
_FORMATS = ("csv", "obj", "txt")


def _require_map(val, path):
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(val).__name__}")
    return val


def _check_keys(d, allowed, path):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}: unknown key")


def _number(val, path, positive=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(val).__name__}")
    if positive and not val > 0:
        raise ConfigError(f"{path}: must be positive, got {val}")
    return float(val)


def _integer(val, path):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}: expected an integer, got {type(val).__name__}")
    return int(val)


def _vector(val, path, length=3):
    if not isinstance(val, (list, tuple)) or len(val) != length:
        raise ConfigError(f"{path}: expected a list of {length} numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(val)]


def _matrix(val, path, cols=None):
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(f"{path}: expected a list of rows")
    width = cols if cols is not None else (
        len(val[0]) if isinstance(val[0], (list, tuple)) else 0
    )
    return [_vector(row, f"{path}[{i}]", width) for i, row in enumerate(val)]


def _parse_section(spec, path):
    spec = _require_map(spec, path)
    kind = spec.get("kind")
    if kind == "disk":
        _check_keys(spec, ("kind", "radius"), path)
        if "radius" not in spec:
            raise ConfigError(f"{path}.radius: required for a disk section")
        return {"kind": "disk", "radius": _number(spec["radius"], f"{path}.radius", positive=True)}
    if kind == "polygon":
        _check_keys(spec, ("kind", "vertices"), path)
        if "vertices" not in spec:
            raise ConfigError(f"{path}.vertices: required for a polygon section")
        return {"kind": "polygon", "vertices": _matrix(spec["vertices"], f"{path}.vertices", cols=2)}
    if kind == "triangle":
        _check_keys(spec, ("kind",), path)
        return {"kind": "triangle"}
    raise ConfigError(f"{path}.kind: expected disk|polygon|triangle, got {kind!r}")


def _parse_integrand(spec, path):
    spec = _require_map(spec, path)
    kind = spec.get("kind")
    if kind == "constant":
        _check_keys(spec, ("kind", "value"), path)
        return {"kind": "constant",
                "value": _number(spec.get("value", 1.0), f"{path}.value", positive=True)}
    if kind == "matrix":
        _check_keys(spec, ("kind", "m"), path)
        if "m" not in spec:
            raise ConfigError(f"{path}.m: required for a matrix integrand")
        return {"kind": "matrix", "m": _matrix(spec["m"], f"{path}.m", cols=3)}
    if kind == "table":
        _check_keys(spec, ("kind", "directions", "values", "sharpness"), path)
        for key in ("directions", "values"):
            if key not in spec:
                raise ConfigError(f"{path}.{key}: required for a table integrand")
        out = {
            "kind": "table",
            "directions": _matrix(spec["directions"], f"{path}.directions", cols=3),
            "values": [_number(v, f"{path}.values[{i}]", positive=True)
                       for i, v in enumerate(spec["values"])],
        }
        if "sharpness" in spec:
            out["sharpness"] = _number(spec["sharpness"], f"{path}.sharpness", positive=True)
        return out
    raise ConfigError(f"{path}.kind: expected constant|matrix|table, got {kind!r}")


def _parse_rod(spec, path):
    spec = _require_map(spec, path)
    _check_keys(spec, ("L", "samples", "f0", "twist_target", "section"), path)
    for key in ("L", "samples", "f0"):
        if key not in spec:
            raise ConfigError(f"{path}.{key}: required for an explicit rod")
    f0 = _require_map(spec["f0"], f"{path}.f0")
    _check_keys(f0, ("x0", "t0", "d0"), f"{path}.f0")
    for key in ("x0", "t0", "d0"):
        if key not in f0:
            raise ConfigError(f"{path}.f0.{key}: required")
    out = {
        "L": _number(spec["L"], f"{path}.L", positive=True),
        "samples": _matrix(spec["samples"], f"{path}.samples", cols=3),
        "f0": {k: _vector(f0[k], f"{path}.f0.{k}") for k in ("x0", "t0", "d0")},
        "twist_target": _integer(spec.get("twist_target", 0), f"{path}.twist_target"),
    }
    if "section" in spec:
        out["section"] = _parse_section(spec["section"], f"{path}.section")
    return out


def _parse_problem(block):
    path = "problem"
    block = _require_map(block, path)
    _check_keys(block, (
        "preset", "nodes", "radius", "rods", "section", "epsilon", "rho", "g",
        "elastic", "integrand", "twist_targets", "linking_matrix", "delta0",
        "constraint_mode",
    ), path)
    out = {}
    preset = block.get("preset")
    rods = block.get("rods")
    if (preset is None) == (rods is None):
        raise ConfigError(f"{path}: give exactly one of 'preset' or 'rods'")
    if preset is not None:
        if preset not in presets.PRESETS:
            raise ConfigError(
                f"{path}.preset: unknown preset {preset!r};"
                f" choose from {sorted(presets.PRESETS)}"
            )
        out["preset"] = preset
        out["nodes"] = _integer(block.get("nodes", 256), f"{path}.nodes")
        if out["nodes"] < 8:
            raise ConfigError(f"{path}.nodes: need at least 8")
        if "radius" in block:
            out["radius"] = _number(block["radius"], f"{path}.radius", positive=True)
    else:
        out["rods"] = [
            _parse_rod(r, f"{path}.rods[{i}]") for i, r in enumerate(rods)
        ]
    if "section" in block:
        out["section"] = _parse_section(block["section"], f"{path}.section")
    out["epsilon"] = _number(block.get("epsilon", 1.0), f"{path}.epsilon", positive=True)
    out["rho"] = _number(block.get("rho", 1.0), f"{path}.rho")
    if out["rho"] < 0:
        raise ConfigError(f"{path}.rho: must be nonnegative")
    out["g"] = _vector(block.get("g", [0.0, 0.0, -9.81]), f"{path}.g")

    el = _require_map(block.get("elastic"), f"{path}.elastic")
    _check_keys(el, ("c1", "c2", "c3", "intrinsic"), f"{path}.elastic")
    out["elastic"] = {
        k: _number(el.get(k, 1.0), f"{path}.elastic.{k}", positive=True)
        for k in ("c1", "c2", "c3")
    }
    if el.get("intrinsic") is not None:
        out["elastic"]["intrinsic"] = _vector(el["intrinsic"], f"{path}.elastic.intrinsic")

    out["integrand"] = _parse_integrand(
        block.get("integrand", {"kind": "constant", "value": 1.0}),
        f"{path}.integrand",
    )
    if "twist_targets" in block:
        tt = block["twist_targets"]
        if not isinstance(tt, (list, tuple)):
            raise ConfigError(f"{path}.twist_targets: expected a list")
        out["twist_targets"] = [
            _integer(v, f"{path}.twist_targets[{i}]") for i, v in enumerate(tt)
        ]
    if "linking_matrix" in block:
        out["linking_matrix"] = _matrix(block["linking_matrix"], f"{path}.linking_matrix")
    if block.get("delta0") is not None:
        out["delta0"] = _number(block["delta0"], f"{path}.delta0", positive=True)
    if block.get("constraint_mode") is not None:
        if block["constraint_mode"] not in ("linked", "reduced"):
            raise ConfigError(
                f"{path}.constraint_mode: expected linked|reduced,"
                f" got {block['constraint_mode']!r}"
            )
        out["constraint_mode"] = block["constraint_mode"]
    return out


def _parse_solver(block):
    path = "solver"
    block = _require_map(block, path)
    _check_keys(block, _SOLVER_KEYS, path)
    out = dict(block)
    try:
        SolveConfig(**out)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return out


def _parse_output(block):
    path = "output"
    block = _require_map(block, path)
    _check_keys(block, ("dir", "prefix", "formats"), path)
    out = {
        "dir": str(block.get("dir", "out")),
        "prefix": str(block.get("prefix", "run")),
    }
    formats = block.get("formats", list(_FORMATS))
    if not isinstance(formats, (list, tuple)) or not formats:
        raise ConfigError(f"{path}.formats: expected a non-empty list")
    for i, f in enumerate(formats):
        if f not in _FORMATS:
            raise ConfigError(
                f"{path}.formats[{i}]: expected one of {list(_FORMATS)}, got {f!r}"
            )
    out["formats"] = list(dict.fromkeys(formats))
    return out


class ExperimentConfig:
    """Validated problem/solver/output blocks plus builders for each."""

    def __init__(self, problem, solver, output):
        self.problem = problem
        self.solver = solver
        self.output = output

    @classmethod
    def parse(cls, doc):
        doc = _require_map(doc, "config")
        _check_keys(doc, ("problem", "solver", "output"), "config")
        if "problem" not in doc:
            raise ConfigError("config.problem: required block")
        return cls(
            _parse_problem(doc["problem"]),
            _parse_solver(doc.get("solver")),
            _parse_output(doc.get("output")),
        )

    @classmethod
    def loads(cls, text):
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not valid YAML: {exc}") from exc
        return cls.parse(doc)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        return cls.loads(text)

    def to_dict(self):
        return {
            "problem": self.problem,
            "solver": self.solver,
            "output": self.output,
        }

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def _section(self, spec):
        if spec["kind"] == "disk":
            return DiskSection(spec["radius"])
        if spec["kind"] == "polygon":
            return PolygonSection(spec["vertices"])
        return presets.triangle_section()

    def build_system(self):
        p = self.problem
        if "preset" in p:
            kwargs = {"n": p["nodes"], "epsilon": p["epsilon"]}
            if "radius" in p and p["preset"] != "circle":
                kwargs["a"] = p["radius"]
            sys = presets.build(p["preset"], **kwargs)
        else:
            rods = []
            for spec in p["rods"]:
                sec = self._section(spec["section"]) if "section" in spec \
                    else presets.triangle_section()
                rods.append(Rod(
                    CurvatureField(spec["L"], spec["samples"]),
                    InitialFrame(**spec["f0"]),
                    CrossSectionProfile(shape=sec),
                    twist_target=spec["twist_target"],
                ))
            sys = RodSystem(rods, linking_target=np.zeros((len(rods), len(rods))),
                            epsilon=p["epsilon"])
        if "section" in p:
            shape = self._section(p["section"])
            sys = RodSystem(
                [Rod(r.w, r.f0, CrossSectionProfile(shape=shape), r.twist_target)
                 for r in sys.rods],
                linking_target=sys.linking_target,
                reference_loops=sys.reference_loops,
                epsilon=sys.epsilon,
                delta0=sys.delta0,
            )
        if "twist_targets" in p:
            if len(p["twist_targets"]) != sys.nrods:
                raise ConfigError("problem.twist_targets: need one entry per rod")
            sys = RodSystem(
                [Rod(r.w, r.f0, r.profile, t)
                 for r, t in zip(sys.rods, p["twist_targets"])],
                linking_target=sys.linking_target,
                reference_loops=sys.reference_loops,
                epsilon=sys.epsilon,
                delta0=sys.delta0,
            )
        if "linking_matrix" in p or "delta0" in p:
            lm = p.get("linking_matrix")
            try:
                sys = RodSystem(
                    sys.rods,
                    linking_target=lm if lm is not None else sys.linking_target,
                    reference_loops=sys.reference_loops,
                    epsilon=sys.epsilon,
                    delta0=p.get("delta0", sys.delta0),
                )
            except ValueError as exc:
                raise ConfigError(f"problem: {exc}") from exc
        return sys

    def build_models(self):
        p = self.problem
        el = p["elastic"]
        elastic = ElasticModel(
            el["c1"], el["c2"], el["c3"], intrinsic=el.get("intrinsic"),
        )
        mass = MassModel(g=p["g"], rho=p["rho"])
        spec = p["integrand"]
        if spec["kind"] == "constant":
            integrand = AnisotropicIntegrand.constant(spec["value"])
        elif spec["kind"] == "matrix":
            try:
                integrand = AnisotropicIntegrand.matrix_norm(np.array(spec["m"]))
            except ValueError as exc:
                raise ConfigError(f"problem.integrand.m: {exc}") from exc
        else:
            integrand = AnisotropicIntegrand.table(
                np.array(spec["directions"]), np.array(spec["values"]),
                **({"sharpness": spec["sharpness"]} if "sharpness" in spec else {}),
            )
        return EnergyModels(elastic, mass, integrand)

    def solve_config(self, seed=None):
        kwargs = dict(self.solver)
        if seed is not None:
            kwargs["seed"] = seed
        return SolveConfig(**kwargs)

    def constraint_mode(self, sys):
        mode = self.problem.get("constraint_mode")
        if mode is not None:
            return mode
        return "linked" if sys.linking_target is not None else "reduced"
