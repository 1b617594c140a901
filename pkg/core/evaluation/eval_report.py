# core/evaluation/eval_report.py
"""
Métricas de transferibilidad y reportes de evaluación
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from core.data.dataset import Dataset
from core.models.model_types import ModelSpec
from core.models.model_zoo import ParamVector, accuracy, predict, predict_labels
from core.posterior.posterior import Posterior, sample
from utils.helpers import write_csv

CSV_HEADER = ('run_id', 'axis_name', 'axis_value', 'victim_id', 'clean_acc', 'asr', 'seed', 'status')
AVERAGE_ID = 'average'

Model = Tuple[ModelSpec, ParamVector]


def success_rate(victim_spec: ModelSpec, victim_params: ParamVector, x_adv: np.ndarray,
                 y: np.ndarray) -> float:
    """
    Fracción de muestras que la víctima clasifica distinto de la etiqueta verdadera
    """
    y = np.asarray(y)
    if y.size == 0:
        return 0.0
    return float(np.mean(predict_labels(victim_spec, victim_params, x_adv) != y))


def bayes_predict(spec: ModelSpec, posterior: Posterior, x: np.ndarray, samples: int,
                  rng: np.random.Generator) -> np.ndarray:
    """
    Promedio bayesiano: media de softmax sobre M muestras de la posterior

    Args:
        spec: Arquitectura
        posterior: Posterior sobre sus parámetros
        x: Entradas (N, C, H, W)
        samples: M >= 1
        rng: Generador del llamador

    Returns:
        np.ndarray: (N, c), filas suman 1
    """
    if samples < 1:
        raise ValueError(f"samples debe ser >= 1, recibido {samples}")

    average = None
    for index in range(samples):
        probs = predict(spec, sample(posterior, rng), x)
        average = probs if average is None else average + (probs - average) / (index + 1)
    return average


def posterior_accuracy_profile(spec: ModelSpec, posterior: Posterior, ds: Dataset, n_samples: int,
                               rng: np.random.Generator) -> Dict[str, float]:
    """
    Precisión del modelo medio y de n_samples modelos muestreados
    """
    mean_acc = accuracy(spec, posterior.mean, ds.images, ds.labels)
    sample_accs = [accuracy(spec, sample(posterior, rng), ds.images, ds.labels)
                   for _ in range(max(n_samples, 1))]
    return {
        'mean_model_acc': mean_acc,
        'sample_min_acc': float(np.min(sample_accs)),
        'sample_mean_acc': float(np.mean(sample_accs)),
        'sample_max_acc': float(np.max(sample_accs)),
    }


def correctly_classified_mask(models: Sequence[Model], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """True donde todos los modelos aciertan la muestra limpia"""
    mask = np.ones(len(y), dtype=bool)
    for spec, params in models:
        mask &= predict_labels(spec, params, x) == np.asarray(y)
    return mask


def attack_subset(models: Sequence[Model], ds: Dataset, max_samples: Optional[int] = None) -> Dataset:
    """
    Subconjunto de prueba que todos los modelos clasifican bien (primeras max_samples)
    """
    indices = np.flatnonzero(correctly_classified_mask(models, ds.images, ds.labels))
    if max_samples is not None:
        indices = indices[:max_samples]
    return ds.subset(indices)


def rank_correlation(values: Sequence[float], scores: Sequence[float]) -> float:
    """Spearman entre los valores del eje y las tasas; 0.0 si es indefinida"""
    if len(values) < 2:
        return 0.0
    rho = spearmanr(values, scores).correlation
    return 0.0 if rho is None or np.isnan(rho) else float(rho)


@dataclass
class VictimRow:
    victim_id: str
    clean_accuracy: float
    attack_success_rate: float
    is_substitute: bool = False


@dataclass
class EvalReport:
    """
    Filas por víctima de una evaluación (una repetición)
    """
    run_id: str
    seed: int
    rows: List[VictimRow] = field(default_factory=list)
    axis_name: str = 'none'
    axis_value: Optional[float] = None
    status: str = 'ok'
    config: Dict[str, Any] = field(default_factory=dict)

    def add(self, victim_id: str, clean_accuracy: float, asr: float, is_substitute: bool = False):
        for rate in (clean_accuracy, asr):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"Tasa fuera de [0, 1] para {victim_id}: {rate}")
        self.rows.append(VictimRow(victim_id, clean_accuracy, asr, is_substitute))

    @property
    def victim_rows(self) -> List[VictimRow]:
        return [row for row in self.rows if not row.is_substitute]

    def average_asr(self) -> Optional[float]:
        """Promedio sobre víctimas, excluye al sustituto"""
        rows = self.victim_rows
        if not rows:
            return None
        return float(np.mean([row.attack_success_rate for row in rows]))

    def average_clean_accuracy(self) -> Optional[float]:
        rows = self.victim_rows
        if not rows:
            return None
        return float(np.mean([row.clean_accuracy for row in rows]))

    def csv_rows(self) -> List[Tuple]:
        rows = [(self.run_id, self.axis_name, self.axis_value, row.victim_id, row.clean_accuracy,
                 row.attack_success_rate, self.seed, self.status) for row in self.rows]
        if self.status == 'ok':
            rows.append((self.run_id, self.axis_name, self.axis_value, AVERAGE_ID,
                         self.average_clean_accuracy(), self.average_asr(), self.seed, self.status))
        return rows

    @classmethod
    def failed(cls, run_id: str, seed: int, axis_name: str, axis_value: Optional[float],
               victim_ids: Sequence[str], error: str = '') -> 'EvalReport':
        report = cls(run_id, seed, axis_name=axis_name, axis_value=axis_value, status='failed')
        report.config = {'error': error}
        report.rows = [VictimRow(victim_id, float('nan'), float('nan')) for victim_id in victim_ids]
        return report


def summarize(reports: Sequence[EvalReport]) -> Dict[str, Any]:
    """
    Medias sobre repeticiones (columna 'Average' de las tablas)
    """
    ok = [r for r in reports if r.status == 'ok']
    summary: Dict[str, Any] = {
        'repetitions': len(reports),
        'failed': len(reports) - len(ok),
        'seeds': [r.seed for r in reports],
        'victims': {},
        'average_asr': None,
        'average_asr_per_seed': [r.average_asr() for r in ok],
    }
    if not ok:
        return summary

    for row in ok[0].rows:
        values = [next(x for x in r.rows if x.victim_id == row.victim_id) for r in ok]
        summary['victims'][row.victim_id] = {
            'is_substitute': row.is_substitute,
            'clean_acc': float(np.mean([v.clean_accuracy for v in values])),
            'asr': float(np.mean([v.attack_success_rate for v in values])),
        }
    summary['average_asr'] = float(np.mean([r.average_asr() for r in ok]))
    return summary


def write_report_csv(path: Path, reports: Sequence[EvalReport]) -> Path:
    rows = [row for report in reports for row in report.csv_rows()]
    return write_csv(path, CSV_HEADER, rows)


def write_summary_json(path: Path, summary: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding='utf-8')
    return path
