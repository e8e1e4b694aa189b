"""
Report schemas.

Every report the CLI emits is a JSON object validated here against a Draft 7
schema before it is written, so the machine-readable output stays stable.
"""

from typing import Any, Dict, List, Optional

from jsonschema import Draft7Validator

from .exceptions import ReportValidationError

LOG_REAL_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["value", "sign", "log_abs"],
    "properties": {
        "value": {"type": ["number", "null"]},
        "sign": {"enum": [-1, 0, 1]},
        "log_abs": {"type": ["number", "null"]},
    },
    "additionalProperties": False,
}

_SEED = {"type": ["integer", "null"]}

PARAMS_REPORT_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "kind",
        "input",
        "K",
        "N",
        "eta_star",
        "T",
        "g",
        "eps_definetti",
        "eps_prime_exact",
        "eps_prime_main",
        "eps_prime_envelope",
        "key_reduction_bits",
        "n_star",
        "feasible",
    ],
    "properties": {
        "kind": {"const": "params"},
        "input": {
            "type": "object",
            "required": ["n", "k", "d_A", "d_B", "eps_coll", "eps_test"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 1},
                "d_A": {"type": "number", "exclusiveMinimum": 0},
                "d_B": {"type": "number", "exclusiveMinimum": 0},
                "eps_coll": LOG_REAL_SCHEMA,
                "eps_test": LOG_REAL_SCHEMA,
            },
        },
        "K": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 1},
        "eta_star": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "T": {"type": "number", "minimum": 0},
        "g": {"type": "number", "exclusiveMinimum": 1},
        "eps_definetti": LOG_REAL_SCHEMA,
        "eps_prime_exact": LOG_REAL_SCHEMA,
        "eps_prime_main": LOG_REAL_SCHEMA,
        "eps_prime_envelope": LOG_REAL_SCHEMA,
        "key_reduction_bits": {"type": "integer", "minimum": 0},
        "n_star": {"type": "integer", "minimum": 38},
        "feasible": {"type": "boolean"},
    },
}

VERIFY_REPORT_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["kind", "suite", "seed", "parameters", "checks", "passed"],
    "properties": {
        "kind": {"const": "verify"},
        "suite": {"enum": ["definetti", "gram", "tails", "lgrc", "invariance"]},
        "seed": _SEED,
        "parameters": {"type": "object"},
        "checks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "passed": {"type": ["boolean", "null"]},
                    "margin": {"type": ["number", "null"]},
                },
            },
        },
        "passed": {"type": "boolean"},
    },
}

SIMULATE_REPORT_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["kind", "seed", "parameters", "failure", "lemma36", "passed"],
    "properties": {
        "kind": {"const": "simulate"},
        "seed": _SEED,
        "parameters": {"type": "object"},
        "failure": {
            "type": "object",
            "required": ["trials", "failures", "rate", "ci_low", "ci_high", "passed"],
        },
        "lemma36": {
            "type": "object",
            "required": ["trials", "events", "estimate", "exact", "mode", "passed"],
        },
        "passed": {"type": "boolean"},
    },
}

REPORT_SCHEMAS: Dict[str, Dict[str, Any]] = {
    "params": PARAMS_REPORT_SCHEMA,
    "verify": VERIFY_REPORT_SCHEMA,
    "simulate": SIMULATE_REPORT_SCHEMA,
}


class ReportValidator:
    """Validates report payloads against the registered JSON schemas."""

    def __init__(self, schemas: Optional[Dict[str, Dict[str, Any]]] = None, logger=None):
        self._validators = {
            kind: Draft7Validator(schema) for kind, schema in (schemas or REPORT_SCHEMAS).items()
        }
        self._logger = logger

    def register_schema(self, kind: str, schema: Dict[str, Any]) -> None:
        Draft7Validator.check_schema(schema)
        self._validators[kind] = Draft7Validator(schema)

    def errors(self, kind: str, payload: Any) -> List[str]:
        """All schema violations of ``payload`` as 'path: message' strings."""
        if kind not in self._validators:
            return [f"unknown report kind '{kind}'"]
        found = sorted(self._validators[kind].iter_errors(payload), key=lambda e: list(map(str, e.path)))
        return [f"{'.'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in found]

    def validate(self, kind: str, payload: Any) -> None:
        """
        Validate a report.

        Raises:
            ReportValidationError: listing every violation
        """
        errors = self.errors(kind, payload)
        if errors:
            if self._logger:
                self._logger.error("Report failed schema validation", extra={"kind": kind, "errors": errors})
            raise ReportValidationError(kind, errors)


_default_validator: Optional[ReportValidator] = None


def get_report_validator(logger=None) -> ReportValidator:
    """Shared validator instance."""
    global _default_validator
    if _default_validator is None:
        _default_validator = ReportValidator(logger=logger)
    return _default_validator
