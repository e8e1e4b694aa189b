"""
Dependency container for the command-line front end.

Holds the logger, the configuration, the report validator and the report
renderer so commands can be exercised in tests with any of them replaced.
Services are built lazily on first use; overrides shadow them until cleared.
"""

from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator, Optional, Tuple, Type, TypeVar

from ..enhancements.logging import setup_logging_from_env
from .config import GdfConfig, config
from .exceptions import InvalidDependencyError, MissingDependencyError
from .validation import ReportValidator

T = TypeVar('T')

# name -> (builder, shared)
ServiceTable = Dict[str, Tuple[Callable[["Container"], Any], bool]]


def _build_logger(container: "Container") -> Any:
    return setup_logging_from_env(container.settings)


def _build_renderer(container: "Container") -> Any:
    from ..tools.reporting import ReportRenderer

    return ReportRenderer(logger=container.get("logger"))


DEFAULT_SERVICES: ServiceTable = {
    "config": (lambda c: c.settings, True),
    "logger": (_build_logger, True),
    "report_validator": (lambda c: ReportValidator(logger=c.get("logger")), False),
    "report_renderer": (_build_renderer, False),
}


class Container:
    """Lazily built services for the gdefinetti CLI."""

    def __init__(self, settings: Optional[GdfConfig] = None, services: Optional[ServiceTable] = None):
        self.settings = settings or config
        self._services: ServiceTable = dict(DEFAULT_SERVICES if services is None else services)
        self._shared: Dict[str, Any] = {}
        self._overrides: Dict[str, Any] = {}

    def register(self, name: str, builder: Callable[["Container"], Any], shared: bool = True) -> None:
        """Register a service; ``shared`` services are built once and cached."""
        self._services[name] = (builder, shared)
        self._shared.pop(name, None)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self._services) | set(self._overrides)))

    def get(self, name: str) -> Any:
        """Get a service instance by name.

        Raises:
            MissingDependencyError: If the service is not registered.
        """
        if name in self._overrides:
            return self._overrides[name]
        if name in self._shared:
            return self._shared[name]
        if name not in self._services:
            raise MissingDependencyError(dependency_name=name, component="Container")
        builder, shared = self._services[name]
        instance = builder(self)
        if shared:
            self._shared[name] = instance
        return instance

    def get_typed(self, name: str, expected_type: Type[T]) -> T:
        service = self.get(name)
        if not isinstance(service, expected_type):
            raise InvalidDependencyError(
                dependency_name=name,
                expected_type=expected_type.__name__,
                actual_type=type(service).__name__,
            )
        return service

    def override(self, name: str, instance: Any) -> None:
        self._overrides[name] = instance

    def clear_overrides(self) -> None:
        """Drop overrides and cached shared services."""
        self._overrides.clear()
        self._shared.clear()

    @contextmanager
    def overridden(self, **instances: Any) -> Iterator["Container"]:
        """Temporarily replace services, restoring the previous state on exit."""
        saved = {name: self._overrides[name] for name in instances if name in self._overrides}
        self._overrides.update(instances)
        try:
            yield self
        finally:
            for name in instances:
                self._overrides.pop(name, None)
            self._overrides.update(saved)


_container: Optional[Container] = None


def get_container() -> Container:
    global _container
    if _container is None:
        _container = Container()
    return _container


def set_container(container: Container) -> None:
    global _container
    _container = container


def reset_container() -> None:
    global _container
    _container = None
