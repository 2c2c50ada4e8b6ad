"""JSON Schemas for the documents written by each CLI subcommand."""

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_INT = {"type": "integer"}

_DENSITY_ROWS = {
    "type": "object",
    "required": ["final", "oscillation", "rows"],
    "properties": {
        "final": _NUM,
        "oscillation": _NUM,
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k", "count", "base", "ratio"],
                "properties": {"k": _INT, "count": _INT, "base": _INT,
                               "ratio": {"type": "number", "minimum": 0, "maximum": 1}},
            },
        },
    },
}

_CHAIN = {
    "type": "object",
    "required": ["set", "value", "oscillation", "depths"],
    "properties": {
        "set": {"type": "string"},
        "value": _NUM,
        "oscillation": _NUM,
        "depths": {"type": "array", "items": _DENSITY_ROWS},
    },
}

_TRACE = {
    "type": "object",
    "required": ["test", "eps", "rows"],
    "properties": {
        "test": {"type": "string"},
        "eps": _NUM,
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n", "raw", "norm_n", "norm_rh", "norm_lil"],
                "properties": {"n": _INT, "raw": {"type": "string"}, "norm_n": _NUM,
                               "norm_rh": _NUM, "norm_lil": _NUM_OR_NULL},
            },
        },
    },
}

_BATTERY = {
    "type": "object",
    "required": ["threshold", "burn_in", "cap", "passed", "worst", "tests"],
    "properties": {
        "passed": {"type": "boolean"},
        "tests": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["test", "max_abs_norm", "n", "passed"],
            },
        },
    },
}


def _envelope(command: str, result: dict) -> dict:
    return {
        "type": "object",
        "required": ["command", "config", "result"],
        "properties": {
            "command": {"const": command},
            "config": {"type": "object"},
            "result": result,
        },
    }


SCHEMAS = {
    "sieve": _envelope("sieve", {
        "type": "object",
        "required": ["kind", "lo", "hi", "path", "sum", "zeros"],
    }),
    "correlate": _envelope("correlate", {
        "type": "object",
        "required": ["trace"],
        "properties": {
            "trace": _TRACE,
            "biased": {
                "type": "object",
                "required": ["p", "rows"],
            },
        },
    }),
    "battery": _envelope("battery", _BATTERY),
    "density": _envelope("density", {
        "type": "object",
        "required": ["set", "k_density", "chain_density"],
        "properties": {"k_density": _DENSITY_ROWS, "chain_density": _CHAIN},
    }),
    "measure": _envelope("measure", {
        "type": "object",
        "required": ["event", "probability", "by_depth", "oscillation", "chain_density"],
        "properties": {"probability": _NUM, "chain_density": _CHAIN,
                       "by_depth": {"type": "array", "items": _NUM}},
    }),
    "facts": _envelope("facts", {
        "type": "object",
        "required": ["cap", "tolerance", "passed", "facts"],
        "properties": {
            "facts": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["fact", "statement", "mode", "passed", "details"],
                    "properties": {"mode": {"enum": ["exact", "tolerance", "vacuous"]}},
                },
            },
        },
    }),
    "prg": _envelope("prg", {
        "type": "object",
        "required": ["N", "schedule", "lo", "hi", "path", "sum"],
        "properties": {"battery": _BATTERY},
    }),
    "transfer": _envelope("transfer", {
        "type": "object",
        "required": ["N", "checked", "passed", "counterexamples", "truncation"],
        "properties": {"counterexamples": {"type": "array"}},
    }),
    "selftest": _envelope("selftest", {
        "type": "object",
        "required": ["passed", "suites"],
        "properties": {
            "suites": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "object", "required": ["suite", "passed", "detail"]},
            },
        },
    }),
}
