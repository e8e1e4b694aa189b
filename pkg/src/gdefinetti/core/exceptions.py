"""
Custom exception classes for gdefinetti.

This module provides a standardized exception hierarchy for consistent error handling
throughout the library. All custom exceptions inherit from GdfError and carry a
``details`` dictionary that ends up verbatim in CLI error reports.
"""

from typing import Any, Dict, List, Optional


class GdfError(Exception):
    """Base exception class for all gdefinetti errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message}. Details: {self.details}"
        return self.message


# === Parameter Errors ===

class ParameterDomainError(GdfError):
    """Raised when an argument lies outside the domain of a function."""

    def __init__(self, name: str, value: Any, expected: str):
        message = f"Parameter '{name}'={value!r} outside its domain: expected {expected}"
        details = {
            "parameter": name,
            "value": value,
            "expected": expected,
        }
        super().__init__(message, details)


class PreconditionError(GdfError):
    """Raised when a bound is evaluated outside the regime in which it holds."""

    def __init__(self, operation: str, condition: str, values: Optional[Dict[str, Any]] = None):
        message = f"Precondition of '{operation}' violated: {condition}"
        details = {
            "operation": operation,
            "condition": condition,
            "values": values or {},
        }
        super().__init__(message, details)


class TestModesTooFewError(GdfError):
    """Raised when the number of test modes k is too small for the energy test."""

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, k: int, minimum: float):
        message = f"Energy test needs k > 2 ln(2/eps) = {minimum:.6g} test modes, got k={k}"
        details = {
            "k": k,
            "minimum_exclusive": minimum,
        }
        super().__init__(message, details)


class DefinettiInapplicableError(GdfError):
    """Raised when the de Finetti reduction cannot be applied at this block length."""

    def __init__(self, n: int, n_star: int, alpha: float):
        message = f"n-5={n - 5} is below N*(alpha={alpha:.6g})={n_star}"
        details = {
            "n": n,
            "n_star": n_star,
            "alpha": alpha,
        }
        super().__init__(message, details)


class UnachievableTargetError(GdfError):
    """Raised when no block length meets the requested security target."""

    def __init__(self, target: float, n_max: int):
        message = f"No block length n <= {n_max} reaches eps' <= {target:.6g}"
        details = {
            "target": target,
            "n_max": n_max,
        }
        super().__init__(message, details)


# === Numerical Errors ===

class NumericalError(GdfError):
    """Base class for numerical failures."""
    pass


class IllConditionedGramError(NumericalError):
    """Raised when the prescaled Gram matrix is too ill-conditioned to whiten."""

    def __init__(self, condition_number: float, limit: float, dimension: int):
        message = (
            f"Gram matrix condition number {condition_number:.3e} exceeds {limit:.1e}"
        )
        details = {
            "condition_number": condition_number,
            "limit": limit,
            "dimension": dimension,
        }
        super().__init__(message, details)


class TailTooLargeError(NumericalError):
    """Raised when a truncated Fock expansion drops more norm than allowed."""

    def __init__(self, tail: float, tolerance: float, cutoff: int):
        message = f"Truncated tail {tail:.3e} above tolerance {tolerance:.1e} at cutoff {cutoff}"
        details = {
            "tail": tail,
            "tolerance": tolerance,
            "cutoff": cutoff,
        }
        super().__init__(message, details)


class CutoffViolationError(NumericalError):
    """Raised when a state does not fit below the photon cutoff of a Fock space."""

    def __init__(self, photons: int, cutoff: int):
        message = f"State with {photons} photons does not fit in a space with cutoff {cutoff}"
        details = {
            "photons": photons,
            "cutoff": cutoff,
        }
        super().__init__(message, details)


class DimensionMismatchError(NumericalError):
    """Raised when operands live on incompatible spaces."""

    def __init__(self, expected: Any, actual: Any, context: str):
        message = f"Dimension mismatch in {context}: expected {expected}, got {actual}"
        details = {
            "expected": expected,
            "actual": actual,
            "context": context,
        }
        super().__init__(message, details)


# === Resource Errors ===

class ResourceLimitError(GdfError):
    """Raised when an explicit state space would exceed the configured size guard."""

    def __init__(self, what: str, requested: int, limit: int):
        message = f"{what} needs {requested} basis states, above the limit of {limit}"
        details = {
            "what": what,
            "requested": requested,
            "limit": limit,
        }
        super().__init__(message, details)


# === Configuration and Report Errors ===

class ConfigurationError(GdfError):
    """Raised when there's a configuration issue."""

    def __init__(self, config_issue: str, config_path: Optional[str] = None):
        message = f"Configuration error: {config_issue}"
        details = {"config_issue": config_issue}
        if config_path:
            details["config_path"] = config_path
        super().__init__(message, details)


class ReportValidationError(GdfError):
    """Raised when a report does not match its documented schema."""

    def __init__(self, report_kind: str, errors: List[str]):
        message = f"Report '{report_kind}' failed schema validation"
        details = {
            "report_kind": report_kind,
            "errors": errors,
        }
        super().__init__(message, details)


class ReportRenderError(GdfError):
    """Raised when a report cannot be rendered in the requested format."""

    def __init__(self, report_format: str, render_error: str):
        message = f"Could not render report as {report_format}: {render_error}"
        details = {
            "format": report_format,
            "render_error": render_error,
        }
        super().__init__(message, details)


# === Dependency Injection Errors ===

class DependencyError(GdfError):
    """Base class for dependency injection errors."""
    pass


class MissingDependencyError(DependencyError):
    """Raised when a required dependency is not registered."""

    def __init__(self, dependency_name: str, component: str):
        message = f"Missing dependency '{dependency_name}' for {component}"
        details = {
            "dependency_name": dependency_name,
            "component": component,
        }
        super().__init__(message, details)


class InvalidDependencyError(DependencyError):
    """Raised when a registered dependency has the wrong type."""

    def __init__(self, dependency_name: str, expected_type: str, actual_type: str):
        message = f"Dependency '{dependency_name}' should be {expected_type}, got {actual_type}"
        details = {
            "dependency_name": dependency_name,
            "expected_type": expected_type,
            "actual_type": actual_type,
        }
        super().__init__(message, details)
