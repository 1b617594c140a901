# core/pipeline/__init__.py
"""
Orquestación del pipeline completo
"""
from .runner import PipelineRunner

__all__ = ['PipelineRunner']
