# core/data/__init__.py
"""
Conjuntos de datos: generador sintético y lector IDX
"""
from .dataset import Dataset, gen_synthetic, class_templates, batches, iter_batches
from .idx_loader import load_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC

__all__ = [
    'Dataset',
    'gen_synthetic',
    'class_templates',
    'batches',
    'iter_batches',
    'load_idx',
    'IDX_IMAGES_MAGIC',
    'IDX_LABELS_MAGIC'
]
