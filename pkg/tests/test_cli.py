# tests/test_cli.py
"""
Pruebas de extremo a extremo del CLI con una configuración diminuta
"""
import json

import pytest

from config.run_config import load_run_config
from config.settings import BTSettings
from core.errors import ExitCode
from core.pipeline.runner import PipelineRunner
from main import build_parser, main
from utils.helpers import read_csv

TINY_OVERRIDES = [
    'data.classes=3',
    'data.per_class_train=12',
    'data.per_class_test=6',
    'data.side=8',
    'data.pixel_noise=0.05',
    'data.class_contrast=0.3',
    'models.victims=["mlp_shallow", "linear"]',
    'train.epochs=8',
    'train.batch_size=8',
    'finetune.epochs=2',
    'finetune.batch_size=16',
    'attack.iterations=3',
    'attack.batch_size=8',
    'eval.repetitions=2',
    'eval.bayes_samples=2',
    'eval.max_attack_samples=10',
]


@pytest.fixture
def cli_args(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    overrides = TINY_OVERRIDES + [f'paths.workdir={tmp_path / "work"}', f'paths.runs_dir={tmp_path / "runs"}']

    def build(command, *extra):
        args = [command]
        for override in overrides + list(extra):
            args += ['--set', override]
        return args

    return build


def _latest_run(tmp_path, filename):
    matches = sorted((tmp_path / "runs").glob(f"*/{filename}"))
    assert matches, f"no se encontró {filename}"
    return matches[-1]


def test_full_pipeline_through_cli(tmp_path, cli_args):
    assert main(cli_args('train')) == ExitCode.OK
    assert (tmp_path / "work" / "checkpoints" / "cnn_substitute.ckpt").is_file()
    assert _latest_run(tmp_path, "accuracy_linear.csv").is_file()

    assert main(cli_args('finetune')) == ExitCode.OK
    assert list((tmp_path / "work" / "posteriors").glob("cnn_substitute_swag_*.btpost"))
    profile = json.loads(_latest_run(tmp_path, "posterior_profile.json").read_text())
    assert set(profile) >= {'pretrained', 'posterior'}

    assert main(cli_args('attack')) == ExitCode.OK
    assert len(list((tmp_path / "work" / "adversarial").glob("*.bin"))) == 2

    assert main(cli_args('eval')) == ExitCode.OK
    first = _latest_run(tmp_path, "eval.csv")
    rows = read_csv(first)
    assert {row['victim_id'] for row in rows} == {'cnn_substitute', 'mlp_shallow', 'linear', 'average'}
    assert len({row['seed'] for row in rows}) == 2
    assert (first.parent / "config.json").is_file()
    assert (first.parent / "run.log").is_file()

    assert main(cli_args('eval')) == ExitCode.OK
    second = _latest_run(tmp_path, "eval.csv")
    assert first != second
    assert first.read_bytes() == second.read_bytes()


def test_sweep_through_cli(tmp_path, cli_args):
    assert main(cli_args('train')) == ExitCode.OK
    code = main(cli_args('sweep', 'posterior.kind="isotropic"', 'finetune.enabled=false',
                         'eval.sweep_axis=sigma', 'eval.sweep_grid=[0.0, 0.01]', 'eval.repetitions=1'))
    assert code == ExitCode.OK

    rows = read_csv(_latest_run(tmp_path, "sweep.csv"))
    assert {row['axis_value'] for row in rows} == {'0.0', '0.01'}
    summary = json.loads(_latest_run(tmp_path, "sweep_summary.json").read_text())
    assert summary['axis_name'] == 'sigma'


def test_configuration_errors_exit_with_config_code(cli_args):
    assert main(cli_args('eval', 'attack.iterations=0')) == ExitCode.CONFIG
    assert main(cli_args('eval', 'attack.unknown=1')) == ExitCode.CONFIG


def test_invalid_thread_environment_exits_with_config_code(cli_args, monkeypatch):
    monkeypatch.setattr(BTSettings, 'THREADS_RAW', "muchos")
    monkeypatch.setattr(BTSettings, 'THREADS', 0)
    assert main(cli_args('train')) == ExitCode.CONFIG


def test_missing_inputs_exit_with_io_code(tmp_path, cli_args):
    assert main(['train', '--config', str(tmp_path / "missing.json")]) == ExitCode.IO
    assert main(cli_args('eval')) == ExitCode.IO


def test_parser_requires_a_command():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args([])
    with pytest.raises(SystemExit):
        parser.parse_args(['--version'])
    args = parser.parse_args(['sweep', '--set', 'eval.sweep_axis=M'])
    assert args.command == 'sweep' and args.overrides == ['eval.sweep_axis=M']


def test_zero_sigma_sweep_point_matches_deterministic_attack(tmp_path):
    config = load_run_config(overrides=TINY_OVERRIDES + [
        f'paths.workdir={tmp_path / "work"}',
        'posterior.kind="isotropic"',
        'finetune.enabled=false',
        'attack.ensemble_size=3',
        'eval.sweep_axis=sigma',
        'eval.sweep_grid=[0.0]',
    ])
    runner = PipelineRunner(config, threads=1)
    runner.train_models()

    table = runner.sweep()
    deterministic = runner.evaluate(config.with_value('attack', 'mode', 'deterministic'))

    swept = table.point_reports(0.0)
    assert len(swept) == len(deterministic) == 2
    for bayes_report, plain_report in zip(swept, deterministic):
        assert bayes_report.seed == plain_report.seed
        assert ([(row.victim_id, row.attack_success_rate) for row in bayes_report.rows]
                == [(row.victim_id, row.attack_success_rate) for row in plain_report.rows])
