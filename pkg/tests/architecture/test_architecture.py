"""
Tests for the supporting architecture: exceptions, configuration, the
dependency container, structured logging, report schemas and rendering.
"""

import importlib
import inspect
import json
import logging
import math
import time
from unittest.mock import Mock

import numpy as np
import pytest

from gdefinetti.core.config import GdfConfig
from gdefinetti.core.container import Container, get_container, reset_container, set_container
from gdefinetti.core.exceptions import (
    ConfigurationError,
    CutoffViolationError,
    DependencyError,
    DimensionMismatchError,
    GdfError,
    IllConditionedGramError,
    InvalidDependencyError,
    MissingDependencyError,
    NumericalError,
    ParameterDomainError,
    ReportRenderError,
    ReportValidationError,
    TailTooLargeError,
)
from gdefinetti.core.mathkit import LogReal
from gdefinetti.core.validation import ReportValidator
from gdefinetti.enhancements.logging import (
    LogFormat,
    PerformanceLogger,
    StructuredFormatter,
    clear_context,
    get_logger,
    set_context,
    setup_logging,
    setup_logging_from_env,
)
from gdefinetti.tools.reporting import ReportRenderer, flatten, render_csv, render_json, summarize_checks, to_plain


def verify_report(**overrides):
    report = {
        "kind": "verify",
        "suite": "gram",
        "seed": None,
        "parameters": {"n": [4], "K": 2},
        "checks": [{"name": "gram_n4_K2", "passed": True, "margin": 1e-10}],
        "passed": True,
    }
    report.update(overrides)
    return report


class TestExceptions:
    """Test the exception hierarchy."""

    def test_base_error(self):
        error = GdfError("Test error", {"key": "value"})
        assert str(error) == "Test error. Details: {'key': 'value'}"
        assert error.message == "Test error"
        assert error.details == {"key": "value"}

    def test_base_error_without_details(self):
        assert str(GdfError("plain")) == "plain"

    def test_parameter_domain_error(self):
        error = ParameterDomainError("eta", 1.5, "a value in (0, 1)")
        assert "eta" in str(error)
        assert error.details["value"] == 1.5
        assert error.details["expected"] == "a value in (0, 1)"

    @pytest.mark.parametrize("error", [
        IllConditionedGramError(1e14, 1e12, 35),
        TailTooLargeError(1e-3, 1e-8, 10),
        CutoffViolationError(6, 4),
        DimensionMismatchError(5, 4, "test"),
    ])
    def test_numerical_errors(self, error):
        assert isinstance(error, NumericalError)
        assert isinstance(error, GdfError)

    def test_dependency_errors(self):
        assert issubclass(MissingDependencyError, DependencyError)
        error = InvalidDependencyError("logger", "Logger", "Mock")
        assert error.details["expected_type"] == "Logger"

    def test_report_errors(self):
        error = ReportValidationError("params", ["K: required"])
        assert "params" in str(error)
        assert error.details["errors"] == ["K: required"]
        assert "xml" in str(ReportRenderError("xml", "unknown format"))


class TestConfig:
    """Test settings lookup order and coercion."""

    def test_defaults(self, tmp_path):
        settings = GdfConfig(tmp_path)
        assert settings.get("batches") == 100
        assert settings.get_threads() == 1
        assert settings.get("unknown", "fallback") == "fallback"

    def test_environment_values_are_coerced(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GDF_BATCHES", "1e3")
        monkeypatch.setenv("GDF_MAX_CONDITION", "1e10")
        settings = GdfConfig(tmp_path)
        assert settings.get("batches") == 1000
        assert settings.get("max_condition") == 1e10

    def test_yaml_settings_file(self, tmp_path):
        (tmp_path / "gdefinetti.yaml").write_text("seed: 42\nchunk_size: 500\n", encoding="utf-8")
        settings = GdfConfig(tmp_path)
        assert settings.get_seed() == 42
        assert settings.get("chunk_size") == 500

    def test_settings_file_from_environment(self, tmp_path, monkeypatch):
        path = tmp_path / "custom.yaml"
        path.write_text("threads: 3\n", encoding="utf-8")
        monkeypatch.setenv("GDF_CONFIG_FILE", str(path))
        assert GdfConfig(tmp_path / "elsewhere").get_threads() == 3

    def test_invalid_yaml(self, tmp_path):
        (tmp_path / "gdefinetti.yaml").write_text("seed: [1, 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            GdfConfig(tmp_path).get("seed")

    def test_settings_must_be_a_mapping(self, tmp_path):
        (tmp_path / "gdefinetti.yaml").write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            GdfConfig(tmp_path).get("seed")

    def test_runtime_override_and_reset(self, tmp_path):
        settings = GdfConfig(tmp_path)
        settings.set("seed", "7")
        assert settings.get_seed() == 7
        settings.reset()
        assert settings.get_seed() == 0

    def test_bad_value(self, tmp_path):
        with pytest.raises(ConfigurationError):
            GdfConfig(tmp_path).set("threads", "many")

    def test_to_dict(self, tmp_path):
        data = GdfConfig(tmp_path).to_dict()
        assert data["log_level"] == "WARNING"
        assert "tail_tolerance" in data


class TestContainer:
    """Test the dependency container."""

    def test_default_services(self):
        container = Container()
        assert isinstance(container.get("report_validator"), ReportValidator)
        assert isinstance(container.get("report_renderer"), ReportRenderer)
        assert isinstance(container.get("logger"), logging.Logger)

    def test_missing_service(self):
        with pytest.raises(MissingDependencyError):
            Container().get("database")

    def test_typed_lookup(self):
        container = Container()
        assert isinstance(container.get_typed("report_validator", ReportValidator), ReportValidator)
        with pytest.raises(InvalidDependencyError):
            container.get_typed("logger", ReportValidator)

    def test_override_and_clear(self):
        container = Container()
        mock_renderer = Mock()
        container.override("report_renderer", mock_renderer)
        assert container.get("report_renderer") is mock_renderer
        container.clear_overrides()
        assert isinstance(container.get("report_renderer"), ReportRenderer)

    def test_shared_services_are_cached(self):
        container = Container()
        assert container.get("logger") is container.get("logger")
        assert container.get("report_validator") is not container.get("report_validator")

    def test_scoped_override(self):
        container = Container()
        marker = object()
        with container.overridden(report_validator=marker):
            assert container.get("report_validator") is marker
        assert isinstance(container.get("report_validator"), ReportValidator)

    def test_register_custom_service(self):
        container = Container()
        container.register("answer", lambda c: 42, shared=False)
        assert container.get("answer") == 42
        assert "answer" in container.names

    def test_global_container(self):
        custom = Container()
        set_container(custom)
        assert get_container() is custom
        reset_container()
        assert get_container() is not custom


class TestLogging:
    """Test structured log formatting and timing."""

    def make_record(self, **extra):
        record = logging.LogRecord("gdefinetti.test", logging.INFO, __file__, 10, "hello %s", ("world",), None)
        for key, value in extra.items():
            setattr(record, key, value)
        return record

    def test_json_format_with_extras_and_context(self):
        set_context(suite="gram", operation="verify")
        try:
            line = StructuredFormatter(LogFormat.JSON).format(self.make_record(n=4))
        finally:
            clear_context()
        data = json.loads(line)
        assert data["message"] == "hello world"
        assert data["extra"] == {"n": 4}
        assert data["suite"] == "gram"
        assert data["operation"] == "verify"

    def test_plain_format(self):
        line = StructuredFormatter(LogFormat.PLAIN, include_context=False).format(self.make_record())
        assert "INFO" in line
        assert line.endswith("hello world")

    def test_setup_logging(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        logger = setup_logging(level="DEBUG", format_type="json", log_file=log_file)
        assert logger.level == logging.DEBUG
        assert len(logger.handlers) == 2
        assert logger.propagate is False
        for handler in logger.handlers:
            handler.close()

    def test_namespaced_loggers(self):
        assert get_logger("gdefinetti.core.params").name == "gdefinetti.core.params"
        assert get_logger("elsewhere").name == "gdefinetti.elsewhere"

    def test_performance_logger_records_duration(self):
        logger = Mock()
        with PerformanceLogger("gram_matrix", logger) as timer:
            pass
        assert timer.duration_ms is not None and timer.duration_ms >= 0
        message = logger.log.call_args[0][1]
        assert "gram_matrix" in message and "completed" in message

    def test_performance_logger_reports_throughput(self):
        logger = Mock()
        with PerformanceLogger("operator_matrix_P_eta", logger, samples=1000):
            time.sleep(0.001)
        extra = logger.log.call_args[1]["extra"]
        assert extra["samples_per_s"] > 0
        assert extra["duration_ms"] > 0

    def test_throughput_promoted_in_json_and_suffix(self):
        record = self.make_record(duration_ms=12.5, samples_per_s=2.0e6)
        set_context(seed=7)
        try:
            data = json.loads(StructuredFormatter(LogFormat.JSON).format(record))
            line = StructuredFormatter(LogFormat.PLAIN).format(record)
        finally:
            clear_context()
        assert data["samples_per_s"] == 2.0e6 and "extra" not in data
        assert data["seed"] == 7
        assert line.endswith("[seed=7 12.5ms 2e+06 samples/s]")

    def test_setup_from_config_and_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("GDF_LOG_LEVEL", "info")
        monkeypatch.setenv("GDF_JSON_LOGS", "true")
        monkeypatch.setenv("GDF_LOG_FILE", str(tmp_path / "run.log"))
        logger = setup_logging_from_env(GdfConfig())
        assert logger.level == logging.INFO
        assert len(logger.handlers) == 2
        assert all(h.formatter.format_type is LogFormat.JSON for h in logger.handlers)
        for handler in logger.handlers:
            handler.close()

    def test_colored_format_uses_rich(self):
        logger = setup_logging(format_type="colored")
        assert type(logger.handlers[0]).__name__ == "RichHandler"
        line = logger.handlers[0].formatter.format(self.make_record())
        assert line == "hello world"


class TestReportValidation:
    """Test report schemas."""

    def test_valid_report(self):
        ReportValidator().validate("verify", verify_report())

    def test_missing_field(self):
        report = verify_report()
        del report["checks"]
        with pytest.raises(ReportValidationError) as exc_info:
            ReportValidator().validate("verify", report)
        assert any("checks" in e for e in exc_info.value.details["errors"])

    def test_wrong_suite(self):
        errors = ReportValidator().errors("verify", verify_report(suite="everything"))
        assert errors and errors[0].startswith("suite")

    def test_unknown_kind(self):
        assert ReportValidator().errors("plot", {}) == ["unknown report kind 'plot'"]

    def test_log_real_fields(self):
        validator = ReportValidator()
        validator.register_schema("eps", {"type": "object", "properties": {"eps": {"type": "object"}}})
        assert validator.errors("eps", {"eps": LogReal.from_float(0.5).to_dict()}) == []


class TestReporting:
    """Test conversion and rendering of reports."""

    def test_to_plain(self):
        plain = to_plain({"a": np.float64(0.5), "b": np.array([1, 2]), "c": (np.int64(3), np.bool_(True)),
                          "d": LogReal.from_float(2.0), "e": math.inf})
        assert plain == {"a": 0.5, "b": [1, 2], "c": [3, True],
                         "d": LogReal.from_float(2.0).to_dict(), "e": None}

    def test_flatten(self):
        rows = dict(flatten({"b": {"y": 1, "x": [5, {"z": 2}]}, "a": 0}))
        assert rows == {"a": 0, "b.x.0": 5, "b.x.1.z": 2, "b.y": 1}

    def test_json_is_sorted_and_stable(self):
        report = verify_report()
        assert render_json(report) == render_json(dict(reversed(list(report.items()))))
        assert render_json(report).endswith("\n")

    def test_csv_rows(self):
        lines = render_csv({"kind": "verify", "seed": None, "passed": True}).splitlines()
        assert lines == ["key,value", "kind,\"\"\"verify\"\"\"", "passed,true", "seed,"]

    def test_text_report(self):
        text = ReportRenderer().render(verify_report(), "text")
        assert text.startswith("gdefinetti verify report")
        assert "verdict: PASS" in text
        assert "[pass] gram_n4_K2 (margin 1e-10)" in text

    def test_unknown_format(self):
        with pytest.raises(ReportRenderError):
            ReportRenderer().render(verify_report(), "xml")

    def test_skipped_checks_do_not_fail(self):
        assert summarize_checks([{"passed": True}, {"passed": None}])
        assert not summarize_checks([{"passed": True}, {"passed": False}])


class TestPublicSurface:
    """Public helpers of the numerical modules are listed in __all__."""

    @pytest.mark.parametrize("module_name", ["coherent", "energytest", "fockoracle", "subspace"])
    def test_public_definitions_are_exported(self, module_name):
        module = importlib.import_module(f"gdefinetti.core.{module_name}")
        defined = {
            name for name, obj in vars(module).items()
            if not name.startswith("_")
            and (inspect.isfunction(obj) or inspect.isclass(obj))
            and obj.__module__ == module.__name__
        }
        assert defined <= set(module.__all__)

