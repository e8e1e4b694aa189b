from .config import GdfConfig, config
from .exceptions import GdfError
from .mathkit import LogReal
from .params import DerivedParams, ProtocolInput, compose_security

__all__ = ['GdfConfig', 'config', 'GdfError', 'LogReal', 'DerivedParams', 'ProtocolInput', 'compose_security']
