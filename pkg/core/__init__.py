# core/__init__.py
"""
Núcleo de bayes_transfer
Autodiferenciación, modelos, datos, entrenamiento, posteriors, ataques y evaluación
"""

__version__ = "1.0.0"
__author__ = "bayes_transfer team"
