"""Run configuration: YAML with strict keys, defaults and validation."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError, OpenDotError
from .grid import Grid, build_uniform_grid
from .potentials import (ConfinementPotential, DotPotential, LongitudinalPotential, PotentialModel,
                         check_sector)

# transverse node counts used when grid.n_transverse is left unset
STRIP_TRANSVERSE_NODES = 4001
LINE_TRANSVERSE_NODES = 16001

STAGES = ("validate", "levels", "perturb", "poles", "dispersion", "strongfield")

DEFAULTS: dict = {
    "scenario": "default",
    "potential": {
        "longitudinal": {"family": "lorentzian2", "depth": 2.0, "width": 1.0, "barrier": 0.0},
        "confinement": {"family": "zero", "c": 1.0, "kappa": 0.0, "beta": 0.0, "half_width": 1.0},
        "dot": {"family": "gaussian", "amplitude": 1.0, "x_center": 0.0, "y_center": 0.3,
                "x_width": 1.0, "y_width": 0.5, "y_amplitude": 0.0, "tilt": 0.0},
        "alpha0": 0.6,
        "decay_eps": 1.0,
        "decay_constant": 10.0,
    },
    "grid": {"n": 8001, "L": 40.0, "n_transverse": None, "L_transverse": 8.0},
    "solver": {
        "J": 6,
        "K": None,
        "theta_imag": 0.3,
        "theta_real": 0.0,
        "theta_set": [0.2, 0.3, 0.4],
        "energy_cap": 20.0,
        "ray_tol": 0.02,
        "bound_tol": 1e-7,
        "degeneracy_tol": 1e-9,
        "threshold_tol": 1e-6,
        "near_threshold": 1e-4,
        "search_radius": 0.5,
        "nystrom_max_nodes": 4001,
    },
    "sweep": {"B": [1e-3, 2e-3, 5e-3, 1e-2], "lambda": [0.0], "p_range": None, "p_samples": 121},
    "strong_field": {
        "B": [0.5, 1.0, 2.0, 5.0],
        "lambda": 1.0,
        "eps": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        "d": [5.0, 10.0, 20.0, 40.0],
        "direct": True,
        "direct_n": 201,
        "direct_L": 15.0,
    },
    "output": {"directory": "results", "formats": ["csv", "json"], "plots": True},
    "stages": ["validate", "levels", "perturb", "poles", "strongfield"],
}

_TOLERANCES = ("ray_tol", "bound_tol", "degeneracy_tol", "threshold_tol", "near_threshold",
               "search_radius", "energy_cap")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _float_list(values, name: str) -> list[float]:
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(f"{name} must be a non-empty list")
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


@dataclass
class RunConfig:
    raw: dict = field(repr=False)
    model: PotentialModel
    source: str | None = None

    @property
    def scenario(self) -> str:
        return str(self.raw["scenario"])

    @property
    def grid(self) -> dict:
        return self.raw["grid"]

    @property
    def solver(self) -> dict:
        return self.raw["solver"]

    @property
    def sweep(self) -> dict:
        return self.raw["sweep"]

    @property
    def strong(self) -> dict:
        return self.raw["strong_field"]

    @property
    def output(self) -> dict:
        return self.raw["output"]

    @property
    def stages(self) -> list[str]:
        return list(self.raw["stages"])

    @property
    def theta(self) -> complex:
        return complex(self.solver["theta_real"], self.solver["theta_imag"])

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def x_grid(self) -> Grid:
        L = float(self.grid["L"])
        return build_uniform_grid(-L, L, int(self.grid["n"]))

    def y_grid(self) -> Grid:
        a = self.model.half_width
        n = self.grid["n_transverse"]
        if n is None:
            n = STRIP_TRANSVERSE_NODES if a is not None else LINE_TRANSVERSE_NODES
        if a is not None:
            return build_uniform_grid(-a, a, n)
        Ly = float(self.grid["L_transverse"])
        return build_uniform_grid(-Ly, Ly, n)

    def with_overrides(self, **sections) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        for name, values in sections.items():
            if isinstance(raw.get(name), dict):
                raw[name].update(values)
            else:
                raw[name] = values
        return build_config(raw, self.source)


def _build_model(pot: dict) -> PotentialModel:
    try:
        conf = dict(pot["confinement"])
        if conf["half_width"] is not None:
            conf["half_width"] = float(conf["half_width"])
        return PotentialModel(
            longitudinal=LongitudinalPotential(**pot["longitudinal"]),
            confinement=ConfinementPotential(**conf),
            dot=DotPotential(**pot["dot"]),
            alpha0=float(pot["alpha0"]),
            decay_eps=float(pot["decay_eps"]),
            decay_constant=float(pot["decay_constant"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"potential section: {exc}") from exc


def build_config(data: dict | None, source: str | None = None) -> RunConfig:
    """Merge ``data`` over the defaults and validate it."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at top level")
    raw = _merge(DEFAULTS, data)
    model = _build_model(raw["potential"])
    try:
        _validate(raw, model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(raw, model, source)


def _validate(raw: dict, model: PotentialModel) -> None:

    g = raw["grid"]
    if not isinstance(g["n"], int) or g["n"] < 3:
        raise ConfigError("grid.n must be an integer >= 3")
    if g["n_transverse"] is not None and (not isinstance(g["n_transverse"], int) or g["n_transverse"] < 3):
        raise ConfigError("grid.n_transverse must be an integer >= 3 or null")
    for key in ("L", "L_transverse"):
        if float(g[key]) <= 0:
            raise ConfigError(f"grid.{key} must be positive")

    s = raw["solver"]
    if not isinstance(s["J"], int) or s["J"] < 1:
        raise ConfigError("solver.J must be a positive integer")
    if s["K"] is not None and (not isinstance(s["K"], int) or not 1 <= s["K"] <= s["J"]):
        raise ConfigError("solver.K must be an integer with 1 <= K <= J")
    if not isinstance(s["nystrom_max_nodes"], int) or s["nystrom_max_nodes"] < 3:
        raise ConfigError("solver.nystrom_max_nodes must be an integer >= 3")
    for key in _TOLERANCES:
        if not float(s[key]) > 0:
            raise ConfigError(f"solver.{key} must be > 0")
    try:
        check_sector(model, complex(s["theta_real"], s["theta_imag"]))
        for t in _float_list(s["theta_set"], "solver.theta_set"):
            check_sector(model, complex(s["theta_real"], t))
    except OpenDotError as exc:
        raise ConfigError(str(exc)) from exc

    sw = raw["sweep"]
    sw["B"] = _float_list(sw["B"], "sweep.B")
    sw["lambda"] = _float_list(sw["lambda"], "sweep.lambda")
    if sw["p_range"] is not None:
        pr = _float_list(sw["p_range"], "sweep.p_range")
        if len(pr) != 2 or pr[0] >= pr[1]:
            raise ConfigError("sweep.p_range must be [lo, hi] with lo < hi")
        sw["p_range"] = pr
    if not isinstance(sw["p_samples"], int) or sw["p_samples"] < 5:
        raise ConfigError("sweep.p_samples must be an integer >= 5")

    st = raw["strong_field"]
    st["B"] = _float_list(st["B"], "strong_field.B")
    st["eps"] = _float_list(st["eps"], "strong_field.eps")
    st["d"] = _float_list(st["d"], "strong_field.d")
    if any(e <= 0 for e in st["eps"]) or any(d <= 0 for d in st["d"]):
        raise ConfigError("strong_field.eps and strong_field.d must be positive")
    if not isinstance(st["direct_n"], int) or not 3 <= st["direct_n"] <= 301:
        raise ConfigError("strong_field.direct_n must be an integer in [3, 301]")

    stages = raw["stages"]
    if not isinstance(stages, list) or any(x not in STAGES for x in stages):
        raise ConfigError(f"stages must be a list drawn from {STAGES}")
    fmts = raw["output"]["formats"]
    if not isinstance(fmts, list) or any(f not in ("csv", "json") for f in fmts):
        raise ConfigError("output.formats must be a list drawn from ['csv', 'json']")


def load_config(path: str | Path | None) -> RunConfig:
    """Read a YAML file (None gives the default scenario)."""
    if path is None:
        return build_config({})
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return build_config(data, str(path))


def dump_default_config() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)

