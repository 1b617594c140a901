# core/posterior/posterior_io.py
"""
Archivo de posterior: b"BTPOST1" + encabezado JSON + media (+ diag_var en SWAG)
"""
from pathlib import Path

from core.errors import DataFormatError
from core.models.model_zoo import ParamVector
from core.posterior.posterior import IsotropicPosterior, Posterior, SwagPosterior
from utils.binary_format import read_artifact, write_artifact

POSTERIOR_MAGIC = b"BTPOST1"


def save_posterior(path: Path, posterior: Posterior, note: str = "") -> Path:
    header = {
        'kind': posterior.kind,
        'spec_id': posterior.spec_id,
        'param_count': len(posterior.mean),
        'note': note
    }
    if isinstance(posterior, IsotropicPosterior):
        header['sigma'] = float(posterior.sigma)
        arrays = [posterior.mean.values]
    else:
        header['scale'] = float(posterior.scale)
        header['beta'] = float(posterior.beta)
        arrays = [posterior.mean.values, posterior.diag_var]

    return write_artifact(path, POSTERIOR_MAGIC, header, arrays)


def load_posterior(path: Path) -> Posterior:
    """
    Leer una posterior isotrópica o SWAG diagonal
    """
    header, arrays = read_artifact(path, POSTERIOR_MAGIC)
    kind = header.get('kind')
    spec_id = str(header.get('spec_id', ''))

    if kind == IsotropicPosterior.kind:
        if len(arrays) != 1:
            raise DataFormatError(f"{path}: se esperaba 1 arreglo, hay {len(arrays)}")
        return IsotropicPosterior(ParamVector(arrays[0], spec_id), float(header['sigma']))

    if kind == SwagPosterior.kind:
        if len(arrays) != 2 or arrays[0].size != arrays[1].size:
            raise DataFormatError(f"{path}: se esperaban media y diag_var del mismo largo")
        return SwagPosterior(ParamVector(arrays[0], spec_id), arrays[1],
                             scale=float(header['scale']), beta=float(header['beta']))

    raise DataFormatError(f"{path}: tipo de posterior desconocido '{kind}'")
