# utils/logger.py
"""
Sistema de logging para bayes_transfer
"""
import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from config.settings import settings

LOG_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)-15s | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class BTLogger:
    """
    Gestor de logging del sistema
    Logger raíz 'bayes_transfer' con hijos por área (training, attack)
    """

    _instance: Optional['BTLogger'] = None
    _logger: Optional[logging.Logger] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def setup(self) -> logging.Logger:
        """
        Configurar sistema de logging (idempotente)
        """
        if self._logger is not None:
            return self._logger

        self._logger = logging.getLogger('bayes_transfer')
        self._logger.setLevel(getattr(logging, settings.LOG_LEVEL, logging.INFO))

        # Evitar duplicación de handlers
        if self._logger.handlers:
            return self._logger

        formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.INFO)
        console_handler.setFormatter(formatter)
        self._logger.addHandler(console_handler)

        # Handler para archivo con rotación
        if settings.LOG_FILE:
            try:
                settings.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)

                file_handler = logging.handlers.RotatingFileHandler(
                    filename=settings.LOG_FILE,
                    maxBytes=settings.LOG_MAX_BYTES,
                    backupCount=settings.LOG_BACKUP_COUNT,
                    encoding='utf-8'
                )
                file_handler.setLevel(getattr(logging, settings.LOG_LEVEL, logging.INFO))
                file_handler.setFormatter(formatter)
                self._logger.addHandler(file_handler)

            except Exception as e:
                self._logger.warning(f"No se pudo configurar logging a archivo: {e}")

        return self._logger

    def attach_run_file(self, run_dir: Path) -> logging.Handler:
        """
        Agregar un archivo run.log dentro del directorio de la corrida

        Returns:
            logging.Handler: handler agregado (para quitarlo al terminar)
        """
        logger = self.setup()
        handler = logging.FileHandler(run_dir / "run.log", encoding='utf-8')
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)
        return handler

    def detach_handler(self, handler: logging.Handler):
        logger = self.setup()
        logger.removeHandler(handler)
        handler.close()

    def log_system_message(self, message: str, level: str = "INFO"):
        """
        Registrar mensaje del sistema

        Args:
            message: Mensaje a registrar
            level: Nivel de logging (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        """
        if not self._logger:
            self.setup()

        log_level = getattr(logging, level.upper(), logging.INFO)
        self._logger.log(log_level, message)

    def log_training(self, run: str, epoch: int, loss: float, accuracy: Optional[float] = None):
        """
        Registrar una época de entrenamiento o ajuste fino
        """
        if not self._logger:
            self.setup()

        training_logger = logging.getLogger('bayes_transfer.training')
        if accuracy is None:
            training_logger.info(f"{run} | época {epoch}: pérdida {loss:.6f}")
        else:
            training_logger.info(f"{run} | época {epoch}: pérdida {loss:.6f}, acc test {accuracy:.4f}")

    def log_attack(self, victim_id: str, success_rate: float, context: str = ""):
        if not self._logger:
            self.setup()

        attack_logger = logging.getLogger('bayes_transfer.attack')
        suffix = f" [{context}]" if context else ""
        attack_logger.info(f"Víctima {victim_id}: tasa de éxito {success_rate:.4f}{suffix}")

    def log_error(self, error: Exception, context: str = ""):
        """
        Registrar error con contexto
        """
        if not self._logger:
            self.setup()

        error_msg = f"Error en {context}: {str(error)}" if context else str(error)
        self._logger.error(error_msg, exc_info=settings.DEBUG_MODE)


# Instancia global del logger
bt_logger = BTLogger()


def setup_logging() -> logging.Logger:
    """
    Función de conveniencia para configurar logging
    """
    return bt_logger.setup()


def log_system(message: str, level: str = "INFO"):
    """
    Función de conveniencia para logging de sistema
    """
    bt_logger.log_system_message(message, level)


def log_training(run: str, epoch: int, loss: float, accuracy: Optional[float] = None):
    bt_logger.log_training(run, epoch, loss, accuracy)


def log_attack(victim_id: str, success_rate: float, context: str = ""):
    bt_logger.log_attack(victim_id, success_rate, context)


def log_error(error: Exception, context: str = ""):
    """
    Función de conveniencia para logging de errores
    """
    bt_logger.log_error(error, context)
