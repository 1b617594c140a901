# utils/__init__.py
"""
Módulo de utilidades
"""
from .logger import setup_logging, log_system, log_error, log_training, log_attack
from .seed_generator import SeedGenerator, rng_for
from .helpers import get_system_info, write_csv, read_csv, run_directory_name

__all__ = [
    'setup_logging',
    'log_system',
    'log_error',
    'log_training',
    'log_attack',
    'SeedGenerator',
    'rng_for',
    'get_system_info',
    'write_csv',
    'read_csv',
    'run_directory_name'
]
