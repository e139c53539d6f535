"""Run configuration: one JSON document per experiment, validated against a versioned schema."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .asymptotics import geometric_ladder
from .errors import ConfigError
from .lattice import Basis, FrequencySet
from .potential import DecayRule, Potential
from .precision import Precision
from .symbols import MOLLIFIERS, Mollifier

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "N": 3,
    "P0": 1.0,
    "mollifier": "standard",
    "precision": 60,
    "epsilon": {"max": 1e-3, "points": 12, "ratio": 0.5},
    "oracle": {"grid": 256},
}


def schema() -> dict:
    text = resources.files("apgauge").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def validate(doc: dict) -> None:
    """Raise ConfigError naming the offending field of the first schema violation."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if not errors:
        return
    err = errors[0]
    if err.validator == "oneOf" and not err.absolute_path:
        raise ConfigError("exactly one of 'coefficients' or 'decay' must be given", "coefficients|decay")
    raise ConfigError(err.message, _path(err.absolute_path))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    doc: dict
    potential: Potential

    @property
    def name(self) -> str:
        return self.doc.get("name", "unnamed")

    @property
    def N(self) -> int:
        return int(self.doc["N"])

    @property
    def P0(self) -> float:
        return float(self.doc["P0"])

    @property
    def delta(self) -> float | None:
        return self.doc.get("delta")

    @property
    def mollifier(self) -> Mollifier:
        return MOLLIFIERS[self.doc["mollifier"]]

    @property
    def prec(self) -> Precision:
        return Precision(int(self.doc["precision"]))

    @property
    def lam(self) -> float | None:
        return self.doc.get("lambda")

    @property
    def gap_theta(self) -> tuple[int, ...] | None:
        g = self.doc.get("gap_theta")
        return tuple(g) if g is not None else None

    @property
    def ladder(self) -> list[float]:
        e = self.doc["epsilon"]
        return geometric_ladder(e["max"], e["points"], e["ratio"])

    @property
    def oracle_M(self) -> int | None:
        return self.doc["oracle"].get("M")

    @property
    def oracle_grid(self) -> int:
        return int(self.doc["oracle"]["grid"])

    @property
    def superres(self) -> dict:
        return dict(self.doc.get("superres", {}))


def _frequency(coeffs, dim: int, path: str) -> tuple[int, ...]:
    if len(coeffs) != dim:
        raise ConfigError(f"expected {dim} integer coefficients, got {len(coeffs)}", path)
    return tuple(int(c) for c in coeffs)


def build_config(doc: dict) -> RunConfig:
    validate(doc)
    resolved = _merge(DEFAULTS, doc)
    basis = Basis(tuple(resolved["basis"]))
    dim = basis.dim
    basis.check_independence(8)
    if "decay" in resolved:
        d = resolved["decay"]
        rule = DecayRule(float(d["C"]), float(d["P"]), int(d.get("seed", 0)), float(d.get("tau", 0.0)))
        potential = Potential.from_decay(basis, rule, int(d.get("max_order", 4)))
    else:
        coeffs = {}
        for i, c in enumerate(resolved["coefficients"]):
            k = _frequency(c["coeffs"], dim, f"coefficients[{i}].coeffs")
            coeffs[k] = complex(c.get("re", 0.0), c.get("im", 0.0))
        theta = None
        if "theta" in resolved:
            elems = tuple(_frequency(t, dim, f"theta[{i}]") for i, t in enumerate(resolved["theta"]))
            theta = FrequencySet(basis, elems)
        potential = Potential(basis, coeffs, _theta=theta)
    if "gap_theta" in resolved:
        _frequency(resolved["gap_theta"], dim, "gap_theta")
    return RunConfig(resolved, potential)


def shipped() -> list[str]:
    folder = resources.files("apgauge").joinpath("configs")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def load_config(source) -> RunConfig:
    """From a dict, a JSON file path, or the name of a shipped config."""
    if isinstance(source, dict):
        return build_config(source)
    path = Path(source)
    if not path.exists():
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        if name not in shipped():
            raise ConfigError(f"no config file or shipped config named {source!r}", "config")
        text = resources.files("apgauge").joinpath(f"configs/{name}.json").read_text()
    else:
        text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "config") from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", "config")
    return build_config(doc)
