"""TOML configuration: strict loading, defaults, and a resolved echo that reloads identically."""

from __future__ import annotations

import copy
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, FracSapError, InvalidArgument, ValidationError
from .model import CoefficientSet, InitialSegment, ModelSpec, Preset, Profile
from .noise import LevySpec
from .periodicity import DEFAULT_CHECKPOINTS
from .solution_operator import SectorialSpec
from .solver import SolverConfig, check_alignment

CONFIG_DIR = Path(__file__).parent / "configs"

_PRESET_DEFAULTS = {
    "kind": "zero", "functional": "now", "mark_scale": "one",
    "mean": 0.0, "cos": [], "sin": [], "period": None, "c0": 0.0, "p": 1.0, "loading": None,
}

DEFAULTS = {
    "operator": {"alpha": None, "eigenvalues": None, "basis": None, "mu": None,
                 "theta": 0.3, "C": 1.0, "M": 1.0},
    "noise": {"dim": None, "drift": None, "Q": None, "atoms": []},
    "model": {"tau": 1.0, "omega": 1.0,
              "phi": {"kind": "constant", "value": None, "slope": None, "values": None}},
    "coefficients": {"k0": 0.5, "L": 1.0, "sap_omega": None,
                     **{role: dict(_PRESET_DEFAULTS) for role in ("h", "f", "g", "F", "G")}},
    "solver": {"step": 0.05, "horizon": 10.0, "scheme": "time_step", "picard_max_iter": 10,
               "picard_tol": 0.0, "neutral_tol": 1e-12, "neutral_max_iter": 100},
    "analysis": {"checkpoints": list(DEFAULT_CHECKPOINTS), "omega": None, "fraction": 0.25,
                 "n_boot": 200, "max_per_cloud": 500, "paths": 100, "seed": 0,
                 "sample_budget": 400},
}

_REQUIRED = {("operator", "alpha"), ("operator", "eigenvalues")}
_ATOM_KEYS = {"mark", "rate"}


@dataclass(frozen=True)
class AnalysisConfig:
    checkpoints: tuple
    omega: float
    fraction: float = 0.25
    n_boot: int = 200
    max_per_cloud: int = 500
    paths: int = 100
    seed: int = 0
    sample_budget: int = 400


@dataclass
class LoadedConfig:
    model: ModelSpec
    solver: SolverConfig
    analysis: AnalysisConfig
    resolved: dict
    source: str = ""

    def __iter__(self):
        return iter((self.model, self.solver, self.analysis))


def _merge(defaults, given, path):
    """Recursively apply defaults; reject keys not present in ``defaults``."""
    out = {}
    for key in given:
        if key not in defaults:
            where = ".".join(path + [key])
            raise ConfigError(f"unknown key '{where}'")
    for key, dflt in defaults.items():
        if isinstance(dflt, dict):
            sub = given.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"'{'.'.join(path + [key])}' must be a table")
            out[key] = _merge(dflt, sub, path + [key])
        else:
            out[key] = copy.deepcopy(given.get(key, dflt))
    return out


def resolve(raw: dict) -> dict:
    """Defaults applied, unknown keys rejected, derived defaults filled in."""
    cfg = _merge(DEFAULTS, raw, [])
    for sect, key in sorted(_REQUIRED):
        if cfg[sect][key] is None:
            raise ConfigError(f"missing required key '{sect}.{key}'")
    op = cfg["operator"]
    op["eigenvalues"] = [float(a) for a in np.atleast_1d(op["eigenvalues"])]
    d = len(op["eigenvalues"])
    if op["mu"] is None:
        op["mu"] = max(op["eigenvalues"])
    nz = cfg["noise"]
    if nz["dim"] is None:
        nz["dim"] = d
    if nz["drift"] is None:
        nz["drift"] = [0.0] * nz["dim"]
    if nz["Q"] is None:
        nz["Q"] = [0.0] * nz["dim"]
    for k, atom in enumerate(nz["atoms"]):
        if not isinstance(atom, dict):
            raise ConfigError(f"'noise.atoms[{k}]' must be a table with mark and rate")
        extra = set(atom) - _ATOM_KEYS
        if extra:
            raise ConfigError(f"unknown key 'noise.atoms[{k}].{sorted(extra)[0]}'")
        if set(atom) != _ATOM_KEYS:
            raise ConfigError(f"'noise.atoms[{k}]' needs both mark and rate")
        atom["mark"] = [float(v) for v in np.atleast_1d(atom["mark"])]
    phi = cfg["model"]["phi"]
    if phi["value"] is None and phi["kind"] != "values":
        phi["value"] = [1.0] * d
    co = cfg["coefficients"]
    if co["sap_omega"] is None:
        co["sap_omega"] = cfg["model"]["omega"]
    for role in ("h", "f", "g", "F", "G"):
        if co[role]["period"] is None:
            co[role]["period"] = co["sap_omega"]
    an = cfg["analysis"]
    if an["omega"] is None:
        an["omega"] = cfg["model"]["omega"]
    return cfg


def _preset(sect):
    prof = Profile(mean=sect["mean"], cos=tuple(sect["cos"]), sin=tuple(sect["sin"]),
                   period=sect["period"], c0=sect["c0"], p=sect["p"])
    return Preset(sect["kind"], prof, sect["functional"], sect["mark_scale"], sect["loading"])


def build(cfg: dict):
    """Construct (ModelSpec, SolverConfig, AnalysisConfig) from a resolved dict."""
    op, nz, md, co, sv, an = (cfg[k] for k in
                              ("operator", "noise", "model", "coefficients", "solver", "analysis"))
    sectorial = SectorialSpec(alpha=op["alpha"], eigenvalues=tuple(op["eigenvalues"]),
                              mu=op["mu"], theta=op["theta"], C=op["C"], M=op["M"],
                              basis=None if op["basis"] is None else np.asarray(op["basis"], float))
    sectorial.structural_check()
    noise = LevySpec(nz["dim"], tuple(nz["drift"]), tuple(nz["Q"]),
                     tuple(tuple(a["mark"]) for a in nz["atoms"]),
                     tuple(a["rate"] for a in nz["atoms"]))
    phi = md["phi"]
    seg = InitialSegment(phi["kind"],
                         tuple(np.atleast_1d(phi["value"]).tolist()) if phi["value"] is not None else (),
                         None if phi["slope"] is None else tuple(np.atleast_1d(phi["slope"]).tolist()),
                         None if phi["values"] is None else tuple(np.ravel(phi["values"]).tolist()))
    presets = {}
    for r in ("h", "f", "g", "F", "G"):
        try:
            presets[r] = _preset(co[r])
        except ValidationError as exc:
            raise ConfigError(f"coefficients.{r}: {exc}") from exc
    coeffs = CoefficientSet(**presets, k0=co["k0"], L=co["L"], sap_omega=co["sap_omega"])
    if not 0.0 < coeffs.k0 < 1.0:
        raise ConfigError(f"coefficients.k0={coeffs.k0}: the neutral coefficient bound k0 must "
                          "lie in (0, 1)")
    if not (coeffs.L > 0 and math.isfinite(coeffs.L)):
        raise ConfigError(f"coefficients.L={coeffs.L}: must be positive and finite")
    model = ModelSpec(sectorial, noise, md["tau"], md["omega"], seg, coeffs)
    model.check_dimensions()
    solver = SolverConfig(sv["step"], sv["horizon"], sv["scheme"], sv["picard_max_iter"],
                          sv["picard_tol"], sv["neutral_tol"], sv["neutral_max_iter"])
    check_alignment(model, solver)
    phi_grid = model.phi_grid(solver.step)
    if not np.all(np.isfinite(phi_grid)):
        raise ConfigError("model.phi: must be finite")
    analysis = AnalysisConfig(tuple(float(t) for t in an["checkpoints"]), float(an["omega"]),
                              an["fraction"], int(an["n_boot"]), int(an["max_per_cloud"]),
                              int(an["paths"]), int(an["seed"]), int(an["sample_budget"]))
    return model, solver, analysis


def load_config(path) -> LoadedConfig:
    """Load a TOML config, or the config echo inside a run manifest (``.json``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from exc
        raw = data.get("config", data)
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line, col = _toml_position(exc, text)
            raise ConfigError(f"{path}: parse error at line {line}, column {col}: {exc}") from exc
    return load_dict(raw, source=str(path))


def _toml_position(exc, text):
    """Line and column of a TOML error; "end of document" maps to the last character."""
    if getattr(exc, "lineno", None):
        return exc.lineno, exc.colno
    m = re.search(r"line (\d+), column (\d+)", str(exc))
    if m:
        return int(m.group(1)), int(m.group(2))
    lines = text.splitlines() or [""]
    return len(lines), len(lines[-1]) + 1


def load_dict(raw: dict, source="<dict>") -> LoadedConfig:
    try:
        resolved = resolve(raw)
        model, solver, analysis = build(resolved)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    except (FracSapError, InvalidArgument, ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return LoadedConfig(model, solver, analysis, resolved, source)


def shipped(name) -> Path:
    """Path of a config shipped with the package (``deterministic``, ``sap``, ...)."""
    p = CONFIG_DIR / (name if name.endswith(".toml") else f"{name}.toml")
    if not p.exists():
        raise ConfigError(f"no shipped config named {name!r}")
    return p
