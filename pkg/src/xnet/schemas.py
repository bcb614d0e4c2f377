"""JSON schemas for everything the command line prints with ``--json``.

The schemas are plain dicts (JSON Schema draft 2020-12) so callers can
validate with any conforming validator.
"""

from __future__ import annotations

__all__ = ["SCHEMAS", "schema_for"]

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_STR = {"type": "string"}
_BOOL = {"type": "boolean"}


def _obj(props: dict, required: list[str] | None = None, extra: bool = False) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": list(props) if required is None else required,
        "additionalProperties": extra,
    }


_MIXING_CHECK = _obj({
    "s_size": _INT, "t_size": _INT, "observed_edges": _INT, "expected": _NUM,
    "deviation": _NUM, "bound_paper": _NUM, "bound_standard": _NUM,
    "pass_paper": _BOOL, "pass_standard": _BOOL,
})

_EXPANSION_CHECK = _obj({
    "subset": {"type": "array", "items": _INT}, "subset_size": _INT,
    "neighborhood_size": _INT, "claimed_lower_bound": _NUM, "satisfied": _BOOL, "mode": _STR,
})

_SPECTRAL_BASE = {
    "graph_id": {"type": ["string", "null"]},
    "method": {"enum": ["character-sum", "power-iteration", "dense-eigensolve"]},
    "lambda2": {"type": "number", "minimum": 0},
    "gamma": {"type": "number", "minimum": 0, "maximum": 1},
}

_COST = _obj({"params": _INT, "macs": _INT, "flops_multadd": _INT, "flops_2x": _INT})

SCHEMAS: dict[str, dict] = {
    "graph-gen": _obj({
        "graph_id": _STR, "construction": _STR, "n_left": _INT, "n_right": _INT,
        "degree": _INT, "has_parallel_edges": _BOOL,
        "seed": {"type": ["integer", "null"]},
        "generators": {"type": ["array", "null"], "items": _INT},
        "budget_clamped": {"type": ["boolean", "null"]},
        "output": {"type": ["string", "null"]},
    }),
    "spectrum": _obj({
        **_SPECTRAL_BASE, "degree": _INT, "n": _INT, "iterations": _INT, "residual": _NUM,
    }),
    "verify-mixing": _obj({
        **_SPECTRAL_BASE,
        "checks": {"type": "array", "items": _MIXING_CHECK},
        "bound": {"enum": ["paper", "standard"]},
        "sweep": {"type": ["object", "null"]},
        "violations": _INT,
    }),
    "verify-expansion": _obj({
        **_SPECTRAL_BASE,
        "checks": {"type": "array", "items": _EXPANSION_CHECK},
        "violations": _INT,
    }),
    "verify-sensitivity": _obj({
        "n": _INT, "depth_tested": _INT, "method": {"enum": ["forward", "meet"]},
        "fully_sensitive_at": {"oneOf": [_INT, {"const": "not achieved"}]},
        "growth_ok": _BOOL, "growth_checks": _INT, "growth_failures": _INT,
        "min_frontier": {"type": "array", "items": _INT},
        "max_frontier": {"type": "array", "items": _INT},
    }),
    "verify-paths": _obj({
        "depth": _INT, "gamma_min": _NUM,
        "cases": {"type": "array", "items": _obj({
            "s_size": _INT, "t_size": _INT, "exact_count": _INT, "expected": _NUM,
            "bound": _NUM, "within_bound": _BOOL, "absolute_deviation": _NUM,
            "relative_deviation": _NUM,
        })},
        "violations": _INT,
    }),
    "mask-gen": _obj({
        "kind": {"enum": ["expander", "group", "dense"]}, "n_out": _INT, "n_in": _INT,
        "fan_in": _INT, "kernel": {"type": ["array", "null"], "items": _INT},
        "group_count": {"type": ["integer", "null"]}, "active_count": _INT,
        "dense_count": _INT, "source_graph_id": {"type": ["string", "null"]},
        "output": {"type": ["string", "null"]},
    }),
    "train": _obj({
        "epochs": {"type": "array", "items": _obj({
            "epoch": _INT, "loss": _NUM, "accuracy": _NUM, "alpha": _NUM, "active_params": _INT,
        })},
        "final_grouped_accuracy": _NUM,
        "output": {"type": ["string", "null"]},
    }),
    "account": _obj({
        "convention": _STR, "include_bias": _BOOL,
        "layers": {"type": "array", "items": _obj({
            "index": _INT, "name": _STR, "kind": _STR, "params": _INT, "macs": _INT,
            "flops_multadd": _INT, "flops_2x": _INT,
        })},
        "total": _COST,
    }),
    "manifest": _obj({
        "command": _STR, "arguments": {"type": "array", "items": _STR},
        "seeds": {"type": "object", "additionalProperties": {"type": ["integer", "null"]}},
        "inputs": {"type": "array", "items": _STR},
        "outputs": {"type": "array", "items": _STR},
        "version": _STR, "wall_time_s": _NUM,
    }),
}


def schema_for(name: str) -> dict:
    return SCHEMAS[name]
