# core/evaluation/sweep.py
"""
Barridos sobre σ, λ, M (y ε, escala SWAG) con semillas compartidas
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Sequence

import numpy as np

from core.errors import BTError, ConfigError
from core.evaluation.eval_report import (CSV_HEADER, EvalReport, rank_correlation, summarize,
                                         write_summary_json)
from utils.helpers import write_csv
from utils.logger import log_error, log_system

SINGLE_DRAW_SUFFIX = '-single'


class PointEvaluator(Protocol):
    """Evalúa una configuración completa y devuelve un reporte por repetición"""

    def evaluate(self, config, axis_name: str = 'none', axis_value: Optional[float] = None,
                 run_id: Optional[str] = None) -> List[EvalReport]:
        ...

    def repetition_seeds(self, config) -> List[int]:
        ...


@dataclass
class SweepTable:
    axis_name: str
    grid: List[float]
    run_id: str
    reports: List[EvalReport] = field(default_factory=list)
    single_draw_reports: List[EvalReport] = field(default_factory=list)

    def csv_rows(self) -> List[tuple]:
        rows = []
        for report in self.reports + self.single_draw_reports:
            rows.extend(report.csv_rows())
        return rows

    def point_reports(self, value: float, single_draw: bool = False) -> List[EvalReport]:
        source = self.single_draw_reports if single_draw else self.reports
        return [r for r in source if r.axis_value == value]

    def point_averages(self, single_draw: bool = False) -> List[Optional[float]]:
        """Media de la tasa promedio por punto de la grilla (None si falló)"""
        averages = []
        for value in self.grid:
            summary = summarize(self.point_reports(value, single_draw))
            averages.append(summary['average_asr'])
        return averages

    def summary(self) -> Dict[str, Any]:
        averages = self.point_averages()
        valid = [(v, a) for v, a in zip(self.grid, averages) if a is not None]
        points = [{'axis_value': value, **summarize(self.point_reports(value))} for value in self.grid]
        result = {
            'run_id': self.run_id,
            'axis_name': self.axis_name,
            'grid': list(self.grid),
            'points': points,
            'average_asr': averages,
            'spearman': rank_correlation([v for v, _ in valid], [a for _, a in valid]),
        }
        if valid:
            best_value, _ = max(valid, key=lambda item: item[1])
            result['best_axis_value'] = best_value
        if self.single_draw_reports:
            result['single_draw_average_asr'] = self.point_averages(single_draw=True)
        return result

    def write(self, directory: Path, stem: str = 'sweep') -> Dict[str, Path]:
        directory = Path(directory)
        return {
            'csv': write_csv(directory / f"{stem}.csv", CSV_HEADER, self.csv_rows()),
            'json': write_summary_json(directory / f"{stem}_summary.json", self.summary()),
        }


def _evaluate_point(pipeline: PointEvaluator, config, axis: str, value: float,
                    run_id: str) -> List[EvalReport]:
    try:
        return pipeline.evaluate(config, axis_name=axis, axis_value=value, run_id=run_id)
    except (BTError, ValueError, ArithmeticError) as e:
        log_error(e, f"barrido {axis}={value}")
        victim_ids = [config.models.source] + list(config.models.victims)
        return [EvalReport.failed(run_id, seed, axis, value, victim_ids, str(e))
                for seed in pipeline.repetition_seeds(config)]


def sweep(axis: str, grid: Sequence[float], base_config, pipeline: PointEvaluator,
          run_id: Optional[str] = None) -> SweepTable:
    """
    Ejecutar el pipeline completo por cada punto de la grilla

    Args:
        axis: 'sigma', 'lambda', 'M', 'epsilon' o 'swag_scale'
        grid: Valores del eje (no vacía)
        base_config: RunConfig base; sólo cambia la clave del eje
        pipeline: Evaluador de configuraciones
        run_id: Identificador de filas; por defecto el hash de base_config

    Returns:
        SweepTable: un punto fallido queda marcado 'failed' y el barrido continúa
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ConfigError("La grilla del barrido está vacía")

    run_id = run_id or base_config.config_hash()
    table = SweepTable(axis_name=axis, grid=grid, run_id=run_id)

    for value in grid:
        config = base_config.with_axis(axis, value)
        log_system(f"Barrido {axis}={value!r}")
        table.reports.extend(_evaluate_point(pipeline, config, axis, value, run_id))

        if base_config.eval.single_draw_baseline:
            single = (config.with_value('attack', 'sampling', 'fixed-set')
                      .with_value('attack', 'ensemble_size', 1))
            table.single_draw_reports.extend(
                _evaluate_point(pipeline, single, axis, value, run_id + SINGLE_DRAW_SUFFIX))

    averages = [a for a in table.point_averages() if a is not None]
    if averages:
        log_system(f"Barrido {axis}: mejor tasa promedio {np.max(averages):.4f}")
    return table
