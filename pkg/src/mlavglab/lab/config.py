"""Experiment configurations: defaults per command, deep merge, validation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

KINDS = ("norm-sweep", "decay-sweep", "region-scan", "bl-check", "cz-verify", "bilinear-sphere")

U64 = 2**64


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit code 1)."""


_GRID = {"d": 2, "L": 8.0, "N": 128}

DEFAULTS: dict[str, dict] = {
    "norm-sweep": {
        "grid": {"d": 2, "L": 8.0, "N": 512},
        "operator": {
            "variant": "theta",
            "rotations": "quarter",
            "nodes": 512,
            "levels": [-8, 0],
            "mode": "lacunary",
            "interpolation": "cubic",
            "periodic": False,
            "patches": 1,
        },
        "family": {"kind": "ball-indicators", "exponents": [1, 2, 3, 4], "placement": "origin", "mollify_cells": 1, "trials": 1},
        "tuples": [
            {"p": ["2", "2"], "target": "1", "predicate": "lacunary", "k": 1},
            {"p": ["2", "2"], "target": "2", "predicate": "lacunary", "k": 1},
        ],
        "tolerances": {"flat": 0.1, "oracle": 0.15},
    },
    "bilinear-sphere": {
        "grid": {"d": 1, "L": 32.0, "N": 8192},
        "operator": {
            "variant": "sigma",
            "nodes": 16384,
            "levels": [-8, 2],
            "mode": "lacunary",
            "interpolation": "cubic",
            "periodic": False,
            "patches": 1,
        },
        "family": {"kind": "ball-indicators", "exponents": [1, 2, 3, 4, 5, 6], "placement": "origin", "mollify_cells": 1, "trials": 1},
        "tuples": [
            {"p": ["2", "2"], "target": "1", "predicate": "bilinear_sphere"},
            {"p": ["2", "2"], "target": "2", "predicate": "bilinear_sphere"},
        ],
        "tolerances": {"flat": 0.1, "oracle": 0.15},
    },
    "decay-sweep": {
        "grid": {"d": 2, "L": 1.0, "N": 128},
        "operator": {"variant": "theta", "rotations": "quarter", "interpolation": "spectral", "periodic": True},
        "family": {"kind": "modes", "decay": 1.0},
        "n_range": [1, 6],
        "bands": [0, 7],
        "weak_p": "3/4",
        "node_rule": {"margin": 12},
        "tolerances": {"s_slope_max": -0.2, "growth_slack": 0.5},
    },
    "region-scan": {
        "d": 2,
        "k": 1,
        "m": 2,
        "inv_grid": ["0", "1/6", "1/3", "1/2", "2/3", "5/6", "1"],
        "predicates": ["conv_vk", "lacunary", "l1_improving", "holder", "bilinear_sphere"],
        "empirical": {"enabled": True, "grid": {"d": 2, "L": 8.0, "N": 64}, "nodes": 128, "levels": [-3, 0], "trials": 2},
    },
    "bl-check": {
        "preset": {"d": 2, "k": 1, "m": 2, "rotations": "quarter"},
        "datum": None,
        "depth": 2,
        "random_subspaces": 16,
        "expect": "pass",
    },
    "cz-verify": {
        "grid": {"d": 2, "L": 8.0, "N": 128},
        "refine": True,
        "m": 2,
        "p": "3/4",
        "p_j": ["3/2", "3/2"],
        "height_constant": 1.0,
        "lambda_exponents": [-3, 3],
        "surface_diameter": 2.0,
        "family": {"kind": "gaussian-bumps", "count": 3},
        "tolerances": {"refinement_factor": 2.0},
    },
}


def _merge(base, override, path: str):
    if isinstance(base, dict) and isinstance(override, dict):
        out = dict(base)
        for k, v in override.items():
            if k not in base:
                raise ConfigError(f"{path}.{k}: unknown key")
            out[k] = _merge(base[k], v, f"{path}.{k}") if base[k] is not None else v
        return out
    if isinstance(base, dict) and not isinstance(override, dict):
        raise ConfigError(f"{path}: expected an object")
    return override


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    params: dict

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, **copy.deepcopy(self.params)}


def build_config(kind: str, doc: dict | None = None, seed: int | None = None) -> ExperimentConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    doc = dict(doc or {})
    if "kind" in doc and doc.pop("kind") not in (kind, "lacunary-bilinear-sphere" if kind == "bilinear-sphere" else kind):
        raise ConfigError(f"config is for a different experiment than {kind!r}")
    cfg_seed = doc.pop("seed", 0)
    if seed is not None:
        cfg_seed = seed
    if not isinstance(cfg_seed, int) or isinstance(cfg_seed, bool) or not 0 <= cfg_seed < U64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    params = _merge(copy.deepcopy(DEFAULTS[kind]), doc, "$")
    _validate(kind, params)
    return ExperimentConfig(kind, cfg_seed, params)


def load_config(kind: str, path: str | Path | None, seed: int | None = None) -> ExperimentConfig:
    doc = None
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno} column {exc.colno}): {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    return build_config(kind, doc, seed)


def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_grid(g: dict, where: str):
    _need(isinstance(g.get("d"), int) and g["d"] >= 1, f"{where}.d must be a positive integer")
    _need(isinstance(g.get("N"), int) and g["N"] >= 2 and g["N"] & (g["N"] - 1) == 0, f"{where}.N must be a power of two")
    _need(isinstance(g.get("L"), (int, float)) and g["L"] > 0, f"{where}.L must be positive")


def _validate(kind: str, p: dict):
    if "grid" in p:
        _check_grid(p["grid"], "$.grid")
    if kind in ("norm-sweep", "bilinear-sphere"):
        op = p["operator"]
        _need(op["variant"] in ("theta", "sigma"), "$.operator.variant must be theta or sigma")
        _need(op["mode"] in ("average", "lacunary"), "$.operator.mode must be average or lacunary")
        _need(isinstance(op["levels"], list) and len(op["levels"]) == 2 and op["levels"][0] <= op["levels"][1], "$.operator.levels must be [lo, hi]")
        _need(isinstance(op["patches"], int) and op["patches"] >= 1, "$.operator.patches must be a positive integer")
        fam = p["family"]
        _need(fam["kind"] in ("ball-indicators", "knapp-caps", "gaussian-bumps", "constant"), f"$.family.kind {fam['kind']!r} is not a sweep family")
        _need(fam["placement"] in ("origin", "transversal"), "$.family.placement must be origin or transversal")
        _need(isinstance(p["tuples"], list) and p["tuples"], "$.tuples must be a nonempty list")
        if kind == "bilinear-sphere":
            _need(p["grid"]["d"] in (1, 2), "bilinear-sphere needs d in {1, 2}")
            _need(op["variant"] == "sigma", "bilinear-sphere uses the sigma variant")
    if kind == "decay-sweep":
        lo, hi = p["n_range"]
        _need(1 <= lo <= hi, "$.n_range must satisfy 1 <= lo <= hi")
        _need(p["bands"][0] <= p["bands"][1], "$.bands must be [lo, hi]")
    if kind == "bl-check":
        _need(p["expect"] in ("pass", "fail"), "$.expect must be pass or fail")
        _need(isinstance(p["depth"], int) and p["depth"] >= 1, "$.depth must be a positive integer")
    if kind == "cz-verify":
        _need(len(p["p_j"]) == p["m"], "$.p_j must have m entries")
        lo, hi = p["lambda_exponents"]
        _need(lo <= hi, "$.lambda_exponents must be [lo, hi]")
