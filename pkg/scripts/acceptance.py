# scripts/acceptance.py - EXPERIMENTOS DE ACEPTACIÓN
# ========================================
"""
Experimentos de aceptación a escala de escritorio

Compara ataques determinista, bayesiano isotrópico (con y sin ajuste fino) y
SWAG + ajuste fino, y verifica las tendencias en M y λ.
"""
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

# Agregar directorio raíz al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.run_config import RunConfig
from config.settings import settings
from core.evaluation.eval_report import rank_correlation, summarize, write_report_csv
from core.pipeline.runner import PipelineRunner
from utils.helpers import get_system_info, run_directory_name
from utils.logger import log_system, setup_logging

SIGMA_GRID = (0.003, 0.006, 0.009, 0.012)
ENSEMBLE_GRID = (1, 2, 5, 10)
# λ = 0 se representa con el límite 1e-12 (el radio debe ser positivo)
LAMBDA_GRID = (1e-12, 0.01, 0.1, 0.2, 1.0, 5.0, 20.0)
MARGIN = 0.03


class AcceptanceManager:
    """
    Gestor de experimentos de aceptación
    """

    def __init__(self, base_config: Optional[RunConfig] = None, output_dir: Optional[Path] = None):
        self.base_config = base_config or RunConfig()
        self.output_dir = output_dir or (
            settings.RUNS_DIR / f"acceptance_{run_directory_name(self.base_config.config_hash())}")
        self.runner = PipelineRunner(self.base_config, run_dir=self.output_dir)

    def _config(self, **sections: Dict[str, Any]) -> RunConfig:
        config = self.base_config
        for section, values in sections.items():
            for key, value in values.items():
                config = config.with_value(section, key, value)
        return config

    def _average(self, config: RunConfig, name: str, seeds: Optional[int] = None) -> Dict[str, Any]:
        if seeds is not None:
            config = config.with_value('eval', 'repetitions', seeds)
        reports = self.runner.evaluate(config, run_id=name)
        write_report_csv(self.output_dir / f"{name}.csv", reports)
        summary = summarize(reports)
        log_system(f"[{name}] tasa promedio {summary['average_asr']}")
        return summary

    def run_full_acceptance(self) -> Dict[str, Any]:
        """
        Ejecutar los experimentos de aceptación

        Returns:
            Dict[str, Any]: Resultados por criterio
        """
        results = {
            'start_time': datetime.now().isoformat(),
            'system_info': get_system_info(),
            'criteria': {},
            'errors': []
        }

        try:
            log_system("=== Iniciando experimentos de aceptación ===", "INFO")
            self.output_dir.mkdir(parents=True, exist_ok=True)
            self.runner.train_models()

            results['criteria']['bayesian_beats_deterministic'] = self._bayesian_vs_deterministic()
            results['criteria']['finetuning_helps'] = self._finetuning_helps()
            results['criteria']['swag_helps'] = self._swag_helps()
            results['criteria']['model_count_scaling'] = self._model_count_scaling()
            results['criteria']['lambda_sensitivity'] = self._lambda_sensitivity()
            results['criteria']['reproducible_csv'] = self._reproducibility()

            results['success'] = all(c.get('passed') for c in results['criteria'].values())
            log_system("=== Experimentos de aceptación completados ===", "INFO")

        except Exception as e:
            results['errors'].append(str(e))
            results['success'] = False
            log_system(f"Error durante aceptación: {e}", "ERROR")

        results['end_time'] = datetime.now().isoformat()
        self.output_dir.mkdir(parents=True, exist_ok=True)
        (self.output_dir / "acceptance.json").write_text(
            json.dumps(results, indent=2, sort_keys=True, default=str) + "\n", encoding='utf-8')
        return results

    def _bayesian_vs_deterministic(self) -> Dict[str, Any]:
        """Isotrópica sin ajuste fino contra I-FGSM determinista"""
        deterministic = self._average(self._config(attack={'mode': 'deterministic'}), 'deterministic')

        held_out = self.base_config.models.victims[0]
        candidates = []
        for sigma in SIGMA_GRID:
            config = self._config(posterior={'kind': 'isotropic', 'sigma': sigma},
                                  finetune={'enabled': False})
            summary = self._average(config, f"isotropic_sigma_{sigma}")
            candidates.append((summary['victims'][held_out]['asr'], sigma, summary))

        _, best_sigma, best = max(candidates, key=lambda item: item[0])
        margin = best['average_asr'] - deterministic['average_asr']
        return {'passed': margin >= MARGIN, 'sigma': best_sigma, 'held_out_victim': held_out,
                'deterministic': deterministic['average_asr'], 'bayesian': best['average_asr'],
                'margin': margin}

    def _finetuning_helps(self) -> Dict[str, Any]:
        no_finetune = self._average(self._config(posterior={'kind': 'isotropic'},
                                                 finetune={'enabled': False}), 'isotropic')
        finetuned = self._average(self._config(posterior={'kind': 'isotropic'},
                                               finetune={'enabled': True}), 'isotropic_finetune')
        margin = finetuned['average_asr'] - no_finetune['average_asr']
        return {'passed': margin >= MARGIN, 'no_finetune': no_finetune['average_asr'],
                'finetune': finetuned['average_asr'], 'margin': margin}

    def _swag_helps(self) -> Dict[str, Any]:
        isotropic = self._average(self._config(posterior={'kind': 'isotropic'}), 'isotropic_finetune')
        swag = self._average(self._config(posterior={'kind': 'swag'}), 'swag_finetune')
        wins = sum(s > i for s, i in zip(swag['average_asr_per_seed'], isotropic['average_asr_per_seed']))
        seeds = len(swag['average_asr_per_seed'])
        passed = swag['average_asr'] >= isotropic['average_asr'] - 0.01 and 2 * wins >= seeds
        return {'passed': passed, 'isotropic_finetune': isotropic['average_asr'],
                'swag_finetune': swag['average_asr'], 'wins': wins, 'seeds': seeds}

    def _model_count_scaling(self, seeds: int = 5) -> Dict[str, Any]:
        averages = []
        for count in ENSEMBLE_GRID:
            config = self._config(attack={'sampling': 'fixed-set', 'ensemble_size': count})
            averages.append(self._average(config, f"ensemble_{count}", seeds)['average_asr'])
        rho = rank_correlation(list(ENSEMBLE_GRID), averages)
        return {'passed': rho >= 0.0, 'ensemble_sizes': list(ENSEMBLE_GRID), 'average_asr': averages,
                'spearman': rho}

    def _lambda_sensitivity(self, seeds: int = 5) -> Dict[str, Any]:
        averages = []
        for radius in LAMBDA_GRID:
            config = self._config(finetune={'lambda_radius': radius})
            averages.append(self._average(config, f"lambda_{radius}", seeds)['average_asr'])
        best = int(np.argmax(averages))
        return {'passed': 0 < best < len(LAMBDA_GRID) - 1, 'lambdas': list(LAMBDA_GRID),
                'average_asr': averages, 'best_lambda': LAMBDA_GRID[best]}

    def _reproducibility(self) -> Dict[str, Any]:
        config = self._config(eval={'repetitions': 2})
        paths: List[Path] = []
        for attempt in range(2):
            fresh = PipelineRunner(config, run_dir=self.output_dir)
            path = self.output_dir / f"reproducibility_{attempt}.csv"
            write_report_csv(path, fresh.evaluate(config))
            paths.append(path)
        identical = paths[0].read_bytes() == paths[1].read_bytes()
        return {'passed': identical, 'files': [str(p) for p in paths]}


def main(argv: Sequence[str] = ()) -> int:
    setup_logging()
    results = AcceptanceManager().run_full_acceptance()
    for name, criterion in results['criteria'].items():
        status = "OK" if criterion.get('passed') else "FALLA"
        log_system(f"{name}: {status}")
    return 0 if results.get('success') else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
