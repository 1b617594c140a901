# core/posterior/__init__.py
"""
Posteriors gaussianas (isotrópica y SWAG diagonal)
"""
from .posterior import (IsotropicPosterior, SwagMoments, SwagPosterior, Posterior, sample, sample_many,
                        with_sigma, isotropic_from_params, swag_update, swag_finalize,
                        swag_from_snapshots, swag_from_checkpoints, density_radius,
                        density_radius_log, log_density, DEFAULT_VAR_FLOOR)
from .posterior_io import POSTERIOR_MAGIC, save_posterior, load_posterior

__all__ = [
    'IsotropicPosterior', 'SwagMoments', 'SwagPosterior', 'Posterior',
    'sample', 'sample_many', 'with_sigma', 'isotropic_from_params',
    'swag_update', 'swag_finalize', 'swag_from_snapshots', 'swag_from_checkpoints',
    'density_radius', 'density_radius_log', 'log_density', 'DEFAULT_VAR_FLOOR',
    'POSTERIOR_MAGIC', 'save_posterior', 'load_posterior'
]
