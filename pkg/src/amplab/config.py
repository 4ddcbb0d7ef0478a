"""Experiment configuration: a JSON document validated against a published
schema in which unknown keys are errors."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

EXPERIMENT_KINDS = (
    "se_check", "universality_sym", "universality_rect", "tn_universality",
    "limval_audit", "sbm_z2sync", "cs_phase_diagram", "sinkhorn_demo",
)


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int0 = {"type": "integer", "minimum": 0}
_int1 = {"type": "integer", "minimum": 1}

_spectral = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["semicircle", "marchenko_pastur", "symmetric_two_point", "uniform", "constant", "explicit"]},
        "params": {"type": "object"},
    },
}

_entry_law = {"enum": ["gaussian", "rademacher", "centered_bernoulli", "sparse_rademacher"]}
_basis = {"enum": ["hadamard", "dct2", "haar"]}
_matrix = {"type": "array", "items": {"type": "array", "items": _num}}

_sym_ensemble = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["GOE", "GeneralizedWigner", "SBMCentered", "SymInvariant"]},
        "entry_law": _entry_law,
        "entry_param": _num,
        "variance_profile": _matrix,
        "profile_tol": _pos,
        "p_n": _num,
        "q_n": _num,
        "sbm_log_factor": _pos,
        "sbm_lambda": {"type": "number", "minimum": 0},
        "eigenvalue_law": _spectral,
        "basis": _basis,
    },
}

_rect_ensemble = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["GaussianWhiteNoise", "GeneralizedWhiteNoise", "RectInvariant"]},
        "entry_law": _entry_law,
        "entry_param": _num,
        "variance_profile": _matrix,
        "profile_tol": _pos,
        "singular_value_law": _spectral,
        "left_basis": _basis,
        "right_basis": _basis,
    },
}


def _named(inner):
    return {
        "type": "array",
        "minItems": 1,
        "items": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "spec"],
            "properties": {"name": {"type": "string"}, "spec": inner},
        },
    }


_nonlin_item = {
    "oneOf": [
        {"enum": ["tanh_latest", "identity_latest", "zero", "soft_threshold_latest", "tanh_side"]},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["tanh_latest", "identity_latest", "zero", "soft_threshold_latest", "tanh_side"]},
                "params": {"type": "object"},
            },
        },
    ]
}
_nonlin = {"oneOf": [_nonlin_item, {"type": "array", "minItems": 1, "items": _nonlin_item}]}

_scalar_law = {"enum": ["normal", "rademacher", "constant", "uniform"]}
_init = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "u1": _scalar_law,
        "u1_scale": _num,
        "f": {"type": "array", "items": _scalar_law},
        "g": {"type": "array", "items": _scalar_law},
    },
}

_deriv = {"enum": ["closed_form", "finite_diff", "stein"]}
_amp_common = {
    "T": _int0,
    "init": _init,
    "se_samples": {"type": "integer", "minimum": 2},
    "tolerance": _pos,
    "deriv_mode": _deriv,
    "coef_mode": {"enum": ["prescribed", "empirical"]},
    "max_dense_entries": _int1,
}

PARAM_SCHEMAS = {
    "se_check": {
        "ensemble": _sym_ensemble, "n": _int1, "nonlinearity": _nonlin, **_amp_common,
    },
    "universality_sym": {
        "ensembles": _named(_sym_ensemble), "n": _int1, "nonlinearity": _nonlin,
        "z_limit": _pos, "pass_fraction": {"type": "number", "minimum": 0, "maximum": 1}, **_amp_common,
    },
    "universality_rect": {
        "ensembles": _named(_rect_ensemble), "m": _int1, "n": _int1,
        "u_nonlinearity": _nonlin, "v_nonlinearity": _nonlin,
        "z_limit": _pos, "pass_fraction": {"type": "number", "minimum": 0, "maximum": 1}, **_amp_common,
    },
    "tn_universality": {
        "network": {"type": "object"}, "ensembles": _named(_sym_ensemble), "n": _int1,
        "x_laws": {"type": "array", "items": {"enum": ["normal", "rademacher"]}},
        "z_limit": _pos, "max_dense_entries": _int1,
    },
    "limval_audit": {
        "max_edges": {"type": "integer", "minimum": 0, "maximum": 4},
        "labels": {"type": "array", "minItems": 1, "items": {"type": "array"}},
        "k": _int1,
        "x_laws": {"type": "array", "items": {"enum": ["normal", "rademacher", "semicircle"]}},
        "eigenvalue_law": _spectral,
    },
    "sbm_z2sync": {
        "n": _int1, "T": _int0, "sbm_log_factor": _pos, "sbm_lambda": {"type": "number", "minimum": 0},
        "init_signal": _num, "tolerance": _pos, "max_dense_entries": _int1,
    },
    "cs_phase_diagram": {
        "n": _int1, "deltas": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "rho_relative": {"type": "array", "minItems": 1, "items": _pos},
        "ensembles": {"type": "array", "minItems": 1, "items": {"enum": ["gaussian", "hadamard"]}},
        "T": _int0, "success_tol": _pos, "max_difference": _pos,
        "boundary_band": {"type": "array", "minItems": 2, "maxItems": 2, "items": _num},
    },
    "sinkhorn_demo": {
        "m": _int1, "n": _int1, "profile": {"enum": ["poisson_rank1", "missing_data"]},
        "missing_p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "sinkhorn_tol": _pos, "T": _int0, "tolerance": _pos, "se_samples": {"type": "integer", "minimum": 2},
    },
}

DEFAULTS = {
    "se_check": {
        "ensemble": {"kind": "GOE"}, "n": 4000, "T": 5, "nonlinearity": "tanh_latest",
        "init": {}, "se_samples": 1_000_000, "tolerance": 0.05, "deriv_mode": "closed_form",
        "coef_mode": "empirical", "max_dense_entries": 10**8,
    },
    "universality_sym": {
        "ensembles": [{"name": "goe", "spec": {"kind": "GOE"}},
                      {"name": "rademacher", "spec": {"kind": "GeneralizedWigner", "entry_law": "rademacher"}}],
        "n": 4000, "T": 5, "nonlinearity": "tanh_latest", "init": {}, "se_samples": 1_000_000,
        "tolerance": 0.05, "deriv_mode": "closed_form", "coef_mode": "empirical", "z_limit": 3.0,
        "pass_fraction": 0.95, "max_dense_entries": 10**8,
    },
    "universality_rect": {
        "ensembles": [{"name": "white_noise", "spec": {"kind": "GaussianWhiteNoise"}}],
        "m": 2000, "n": 4000, "T": 4, "u_nonlinearity": "tanh_latest", "v_nonlinearity": "tanh_latest",
        "init": {}, "se_samples": 1_000_000, "tolerance": 0.05, "deriv_mode": "closed_form",
        "coef_mode": "empirical", "z_limit": 3.0, "pass_fraction": 0.95, "max_dense_entries": 10**8,
    },
    "tn_universality": {
        "network": {"type": "diagonal", "k": 1, "edges": [[0, 1], [1, 2]],
                    "vertices": [{"label": [[[0], 1.0]]}] * 3},
        "ensembles": [{"name": "goe", "spec": {"kind": "GOE"}}],
        "n": 1000, "x_laws": ["normal"], "z_limit": 3.0, "max_dense_entries": 10**8,
    },
    "limval_audit": {
        "max_edges": 3, "labels": [[[[1], 1.0]], [[[2], 1.0], [[0], -1.0]]], "k": 1,
        "x_laws": ["normal"], "eigenvalue_law": {"kind": "semicircle"},
    },
    "sbm_z2sync": {
        "n": 4000, "T": 6, "sbm_log_factor": 5.0, "sbm_lambda": 2.0, "init_signal": 0.3,
        "tolerance": 0.05, "max_dense_entries": 10**8,
    },
    "cs_phase_diagram": {
        "n": 4096, "deltas": [0.4, 0.64], "rho_relative": [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9],
        "ensembles": ["gaussian", "hadamard"], "T": 60, "success_tol": 1e-3, "max_difference": 0.15,
        "boundary_band": [0.05, 0.95],
    },
    "sinkhorn_demo": {
        "m": 1000, "n": 2000, "profile": "poisson_rank1", "missing_p": 0.3, "sinkhorn_tol": 1e-8,
        "T": 3, "tolerance": 0.05, "se_samples": 200_000,
    },
}


def _kind_clause(kind):
    return {
        "if": {"properties": {"kind": {"const": kind}}},
        "then": {"properties": {"params": {"type": "object", "additionalProperties": False,
                                           "properties": PARAM_SCHEMAS[kind]}}},
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "amplab experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(EXPERIMENT_KINDS)},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "trials": _int0,
        "params": {"type": "object"},
    },
    "allOf": [_kind_clause(k) for k in EXPERIMENT_KINDS],
}


def schema_errors(doc) -> list:
    v = jsonschema.Draft202012Validator(SCHEMA)
    out = []
    for e in sorted(v.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        out.append(f"{where}: {e.message}")
    return out


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    trials: int = 1
    params: dict = field(default_factory=dict)
    name: str = ""

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        errs = schema_errors(doc)
        if errs:
            raise ConfigError(errs)
        params = copy.deepcopy(DEFAULTS[doc["kind"]])
        params.update(copy.deepcopy(doc.get("params", {})))
        return cls(kind=doc["kind"], seed=int(doc.get("seed", 0)), trials=int(doc.get("trials", 1)),
                   params=params, name=doc.get("name", doc["kind"]))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "seed": self.seed, "trials": self.trials,
                "params": self.params}


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError([f"not valid JSON: {e}"]) from None
    except OSError as e:
        raise ConfigError([f"{path}: {e.strerror}"]) from None
    return ExperimentConfig.from_dict(doc)


# ---------------------------------------------------------------- single-run configs

SE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["goe", "whitenoise"]},
        "T": _int0,
        "init": _init,
        "nonlinearity": _nonlin,
        "v_nonlinearity": _nonlin,
        "gamma": _pos,
        "N": {"type": "integer", "minimum": 2},
        "deriv_mode": _deriv,
    },
}

SE_DEFAULTS = {"kind": "goe", "T": 5, "init": {}, "nonlinearity": "tanh_latest",
               "v_nonlinearity": "tanh_latest", "gamma": 1.0, "N": 1_000_000, "deriv_mode": "closed_form"}

AMP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "ensemble": {"oneOf": [_sym_ensemble, _rect_ensemble]},
        "n": _int1,
        "m": _int1,
        "T": _int0,
        "init": _init,
        "nonlinearity": _nonlin,
        "v_nonlinearity": _nonlin,
        "coef_mode": {"enum": ["prescribed", "empirical"]},
        "deriv_mode": _deriv,
        "se_samples": {"type": "integer", "minimum": 2},
    },
}

AMP_DEFAULTS = {"ensemble": {"kind": "GOE"}, "n": 1000, "T": 5, "init": {}, "nonlinearity": "tanh_latest",
                "v_nonlinearity": "tanh_latest", "coef_mode": "empirical", "deriv_mode": "closed_form",
                "se_samples": 200_000}


def validate_with_defaults(doc: dict, schema: dict, defaults: dict) -> dict:
    errs = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
            for e in jsonschema.Draft202012Validator(schema).iter_errors(doc)]
    if errs:
        raise ConfigError(errs)
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(doc))
    return out
