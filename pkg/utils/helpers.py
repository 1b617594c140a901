# utils/helpers.py
"""
Funciones auxiliares del sistema
"""
import csv
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import psutil


def get_system_info() -> Dict[str, Any]:
    """
    Obtener información del sistema (se guarda junto a cada corrida)

    Returns:
        Dict[str, Any]: Información del sistema
    """
    try:
        return {
            'platform': platform.platform(),
            'machine': platform.machine(),
            'processor': platform.processor(),
            'python_version': platform.python_version(),
            'numpy_version': np.__version__,
            'cpu_count': psutil.cpu_count(),
            'memory_total_gb': round(psutil.virtual_memory().total / (1024**3), 2),
            'timestamp': datetime.now().isoformat()
        }
    except Exception as e:
        return {'error': str(e), 'timestamp': datetime.now().isoformat()}


def run_directory_name(config_hash: str, now: Optional[datetime] = None) -> str:
    """
    Nombre del directorio de corrida: timestamp + hash de configuración
    """
    now = now or datetime.now()
    return f"{now.strftime('%Y%m%d_%H%M%S_%f')}_{config_hash}"


def format_value(value: Any) -> str:
    """
    Formato estable para CSV: floats con repr (ida y vuelta exacta)
    """
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ''
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Escribir CSV con finales de línea '\\n' y formato estable

    Args:
        path: Archivo destino
        header: Nombres de columna
        rows: Filas (mismo largo que header)

    Returns:
        Path: ruta escrita
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def read_csv(path: Path) -> list[dict]:
    """Leer CSV como lista de diccionarios (valores en texto)"""
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))


def format_file_size(size_bytes: int) -> str:
    """
    Formatear tamaño de archivo en formato legible
    """
    if size_bytes == 0:
        return "0 B"

    units = ["B", "KB", "MB", "GB", "TB"]
    size = float(size_bytes)
    unit_index = 0

    while size >= 1024 and unit_index < len(units) - 1:
        size /= 1024
        unit_index += 1

    return f"{size:.1f} {units[unit_index]}"
