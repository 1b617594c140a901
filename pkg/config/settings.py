# config/settings.py
"""
Configuración de entorno del sistema bayes_transfer
Variables BT_* leídas desde el entorno (o un archivo .env)
"""
import os
from pathlib import Path
from typing import Optional

import psutil
from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()


def _default_threads() -> int:
    cpu_count = psutil.cpu_count(logical=True) or 1
    return max(1, cpu_count)


def parse_threads(raw: Optional[str]) -> int:
    """
    Hilos desde BT_THREADS: vacío usa los CPU lógicos, 0 marca un valor inválido
    """
    if raw is None or not raw.strip():
        return _default_threads()
    try:
        threads = int(raw)
    except ValueError:
        return 0
    return threads if threads >= 1 else 0


class BTSettings:
    """
    Configuración centralizada de entorno
    Los hiperparámetros de los experimentos viven en RunConfig, no aquí
    """

    # Rutas del proyecto
    BASE_DIR = Path(__file__).parent.parent
    CONFIG_DIR = BASE_DIR / "config"

    WORKDIR = Path(os.getenv("BT_WORKDIR", "bt_work"))
    RUNS_DIR = Path(os.getenv("BT_RUNS_DIR", "runs"))

    # Logging
    LOG_LEVEL = os.getenv("BT_LOG_LEVEL", "INFO").upper()
    LOG_FILE = Path(os.getenv("BT_LOG_FILE", "logs/bayes_transfer.log"))
    LOG_MAX_BYTES = 10 * 1024 * 1024
    LOG_BACKUP_COUNT = 5

    # Paralelismo (víctimas, evaluaciones y lotes de ataque)
    THREADS_RAW = os.getenv("BT_THREADS")
    THREADS = parse_threads(THREADS_RAW)

    # Desarrollo y debug
    DEBUG_MODE = os.getenv("BT_DEBUG", "false").lower() == "true"

    @classmethod
    def ensure_directories(cls):
        """Crear directorios necesarios si no existen"""
        for directory in [cls.WORKDIR, cls.RUNS_DIR, cls.LOG_FILE.parent]:
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate_configuration(cls) -> list[str]:
        """
        Validar configuración y retornar lista de errores
        """
        errors = []

        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"BT_LOG_LEVEL inválido: {cls.LOG_LEVEL}")

        if cls.THREADS < 1:
            errors.append(f"BT_THREADS inválido: {cls.THREADS_RAW!r} (se espera un entero >= 1)")

        try:
            cls.ensure_directories()
        except Exception as e:
            errors.append(f"Error creando directorios: {e}")

        return errors


# Instancia global de configuración
settings = BTSettings()
