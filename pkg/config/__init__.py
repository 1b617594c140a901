# config/__init__.py
"""
Módulo de configuración del sistema bayes_transfer
"""
from .settings import settings, BTSettings
from .run_config import RunConfig, load_run_config

__all__ = [
    'settings',
    'BTSettings',
    'RunConfig',
    'load_run_config'
]
