# core/evaluation/__init__.py
"""
Evaluación de transferibilidad y barridos
"""
from .eval_report import (CSV_HEADER, AVERAGE_ID, EvalReport, VictimRow, success_rate, bayes_predict,
                          posterior_accuracy_profile, correctly_classified_mask, attack_subset,
                          rank_correlation, summarize, write_report_csv, write_summary_json)
from .sweep import SweepTable, sweep, SINGLE_DRAW_SUFFIX

__all__ = [
    'CSV_HEADER', 'AVERAGE_ID', 'EvalReport', 'VictimRow', 'success_rate', 'bayes_predict',
    'posterior_accuracy_profile', 'correctly_classified_mask', 'attack_subset',
    'rank_correlation', 'summarize', 'write_report_csv', 'write_summary_json',
    'SweepTable', 'sweep', 'SINGLE_DRAW_SUFFIX'
]
