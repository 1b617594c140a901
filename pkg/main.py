# main.py

"""
Punto de entrada principal de bayes_transfer
Subcomandos: train, finetune, attack, eval, sweep
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

# Configurar path para imports
sys.path.insert(0, str(Path(__file__).parent))

from config.run_config import RunConfig, load_run_config
from config.settings import settings
from core import __version__
from core.errors import ArtifactIOError, ConfigError, ExitCode, exit_code_for
from core.pipeline.runner import PipelineRunner
from core.posterior.posterior_io import load_posterior
from utils.helpers import get_system_info, run_directory_name
from utils.logger import bt_logger, log_error, setup_logging

COMMANDS = ('train', 'finetune', 'attack', 'eval', 'sweep')


class BTApplication:
    """
    Aplicación de línea de comandos
    Cada comando crea su propio directorio de corrida con la configuración resuelta
    """

    def __init__(self):
        self.logger: Optional[logging.Logger] = None
        self.config: Optional[RunConfig] = None
        self.run_dir: Optional[Path] = None
        self.runner: Optional[PipelineRunner] = None
        self._run_handler: Optional[logging.Handler] = None

    def initialize(self, config: RunConfig, command: str) -> Path:
        """
        Preparar logging, validar entorno y crear el directorio de corrida

        Returns:
            Path: directorio de la corrida
        """
        self.logger = setup_logging()
        self.logger.info(f"=== bayes_transfer {__version__}: {command} ===")

        config_errors = settings.validate_configuration()
        if config_errors:
            for error in config_errors:
                self.logger.error(f"  - {error}")
            raise ConfigError("Errores de configuración de entorno: " + "; ".join(config_errors))

        self.config = config
        runs_dir = config.resolved_runs_dir()
        self.run_dir = runs_dir / run_directory_name(config.config_hash())
        try:
            self.run_dir.mkdir(parents=True, exist_ok=False)
        except FileExistsError as e:
            raise ArtifactIOError(f"El directorio de corrida ya existe: {self.run_dir}") from e

        self._run_handler = bt_logger.attach_run_file(self.run_dir)
        config.save(self.run_dir / "config.json")
        (self.run_dir / "system_info.json").write_text(
            json.dumps(get_system_info(), indent=2, sort_keys=True) + "\n", encoding='utf-8')

        self.runner = PipelineRunner(config, run_dir=self.run_dir)
        self.logger.info(f"Corrida {self.run_dir.name} (hash {config.config_hash()}, "
                         f"{self.runner.threads} hilos)")
        return self.run_dir

    # =======================================================
    # COMANDOS
    # =======================================================

    def cmd_train(self) -> Dict[str, Any]:
        """Entrenar el sustituto y cada víctima"""
        results = self.runner.train_models()
        return {
            'checkpoints': {spec_id: str(r.checkpoints[-1]) for spec_id, r in results.items()},
            'test_accuracy': {spec_id: r.final_test_accuracy for spec_id, r in results.items()}
        }

    def cmd_finetune(self) -> Dict[str, Any]:
        """
        Construir la posterior del sustituto (con o sin ajuste fino) y guardarla
        """
        posterior = self.runner.ensure_posterior(rebuild=True)
        path = self.runner.posterior_path(self.config)

        reloaded = load_posterior(path)
        if reloaded.kind != posterior.kind or len(reloaded.mean) != len(posterior.mean):
            raise ArtifactIOError(f"La posterior guardada en {path} no coincide al releerla")

        profile = self.runner.posterior_profile()
        (self.run_dir / "posterior_profile.json").write_text(
            json.dumps(profile, indent=2, sort_keys=True) + "\n", encoding='utf-8')
        return {'posterior': str(path), 'kind': posterior.kind, 'profile': profile}

    def cmd_attack(self) -> Dict[str, Any]:
        manifests = self.runner.attack()
        return {'manifests': [str(p) for p in manifests]}

    def cmd_eval(self) -> Dict[str, Any]:
        """Evaluar (reutiliza lotes de 'attack' si existen) y escribir eval.csv"""
        reports = self.runner.evaluate(use_saved=True)
        outputs = self.runner.write_evaluation(reports)
        return {key: str(path) for key, path in outputs.items()}

    def cmd_sweep(self) -> Dict[str, Any]:
        table = self.runner.sweep()
        outputs = table.write(self.run_dir)
        summary = table.summary()
        return {
            'csv': str(outputs['csv']),
            'json': str(outputs['json']),
            'average_asr': summary['average_asr'],
            'spearman': summary['spearman']
        }

    def command(self, name: str) -> Callable[[], Dict[str, Any]]:
        return {
            'train': self.cmd_train,
            'finetune': self.cmd_finetune,
            'attack': self.cmd_attack,
            'eval': self.cmd_eval,
            'sweep': self.cmd_sweep,
        }[name]

    def run(self, command: str, config: RunConfig) -> ExitCode:
        """
        Ejecutar un comando y traducir errores a códigos de salida
        """
        try:
            self.initialize(config, command)
            result = self.command(command)()
            (self.run_dir / "result.json").write_text(
                json.dumps(result, indent=2, sort_keys=True, default=str) + "\n", encoding='utf-8')
            self.logger.info(f"Comando {command} completado: {self.run_dir}")
            return ExitCode.OK
        except Exception as e:
            log_error(e, f"comando {command}")
            return exit_code_for(e)
        finally:
            self.shutdown()

    def shutdown(self):
        if self._run_handler is not None:
            bt_logger.detach_handler(self._run_handler)
            self._run_handler = None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='bayes_transfer',
        description='Ataques de transferencia con modelos sustitutos bayesianos')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)

    helps = {
        'train': 'entrenar el sustituto y las víctimas',
        'finetune': 'construir la posterior (isotrópica o SWAG, con ajuste fino opcional)',
        'attack': 'generar ejemplos adversarios',
        'eval': 'medir tasas de éxito contra las víctimas',
        'sweep': 'barrer sigma, lambda o M',
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=helps[name])
        sub.add_argument('--config', type=Path, default=None, help='archivo JSON de configuración')
        sub.add_argument('--set', dest='overrides', action='append', default=[],
                         metavar='SECCION.CLAVE=VALOR', help='sobrescribir una clave (repetible)')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Función principal de entrada
    """
    args = build_parser().parse_args(argv)

    try:
        config = load_run_config(args.config, args.overrides)
    except Exception as e:
        setup_logging()
        log_error(e, "cargando configuración")
        return int(exit_code_for(e))

    app = BTApplication()
    return int(app.run(args.command, config))


if __name__ == "__main__":
    sys.exit(main())
