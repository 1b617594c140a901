# tests/test_run_config.py
"""
Pruebas de la configuración de corrida
"""
import json

import pytest

from config.run_config import MODE_DEFAULTS, RunConfig, load_run_config, parse_override
from core.errors import ArtifactIOError, ConfigError


def test_defaults_depend_on_posterior_kind():
    swag = RunConfig()
    isotropic = RunConfig().with_value('posterior', 'kind', 'isotropic')

    assert swag.resolved_lambda() == MODE_DEFAULTS['swag']['lambda_radius']
    assert swag.resolved_sigma() == MODE_DEFAULTS['swag']['sigma']
    assert isotropic.resolved_lambda() == 2.0
    assert isotropic.resolved_finetune_lr() == 0.001
    assert isotropic.resolved_sigma() == 0.009
    assert RunConfig().validate() == []


def test_explicit_values_override_mode_defaults():
    config = RunConfig().with_value('finetune', 'lambda_radius', 0.7).with_value('posterior', 'sigma', 0.0)
    assert config.resolved_lambda() == 0.7
    assert config.resolved_sigma() == 0.0


def test_hash_is_stable_and_ignores_paths():
    base = RunConfig()
    moved = base.with_value('paths', 'workdir', '/tmp/elsewhere')
    assert base.config_hash() == moved.config_hash()
    assert len(base.config_hash()) == 12
    assert base.config_hash() != base.with_axis('sigma', 0.01).config_hash()
    # Un nulo resuelto y su valor explícito describen la misma corrida
    assert base.config_hash() == base.with_value('posterior', 'sigma', 0.002).config_hash()


def test_saved_config_reloads_to_the_same_run(tmp_path):
    config = RunConfig().with_value('attack', 'ensemble_size', 4)
    path = config.save(tmp_path / "config.json")
    reloaded = load_run_config(path)
    assert reloaded.config_hash() == config.config_hash()
    assert json.loads(path.read_text())['schema'] == 1


def test_unknown_keys_and_wrong_types_are_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'attack': {'epsilon': 0.1}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'optimizer': {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'schema': 2})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'eval': {'repetitions': 2.5}})
    with pytest.raises(ConfigError):
        RunConfig().with_value('finetune', 'enabled', 'yes')

    config = RunConfig.from_dict({'attack': {'epsilon_budget': 1}})
    assert isinstance(config.attack.epsilon_budget, float)


def test_parse_override_reads_json_or_text():
    assert parse_override('posterior.sigma=0.01') == ('posterior', 'sigma', 0.01)
    assert parse_override('attack.sampling=fixed-set') == ('attack', 'sampling', 'fixed-set')
    assert parse_override('models.victims=["linear"]') == ('models', 'victims', ['linear'])
    with pytest.raises(ConfigError):
        parse_override('posterior.sigma')
    with pytest.raises(ConfigError):
        parse_override('sigma=0.1')


def test_load_applies_overrides_and_validates(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({'schema': 1, 'posterior': {'kind': 'isotropic'}}))

    config = load_run_config(path, ['attack.ensemble_size=3', 'finetune.enabled=false'])
    assert config.attack.ensemble_size == 3
    assert config.finetune.enabled is False

    with pytest.raises(ConfigError):
        load_run_config(path, ['attack.iterations=0'])
    with pytest.raises(ConfigError):
        load_run_config(None, ['finetune.epochs=1'])
    with pytest.raises(ConfigError):
        load_run_config(None, ['posterior.kind=laplace'])


def test_load_reports_missing_and_malformed_files(tmp_path):
    with pytest.raises(ArtifactIOError):
        load_run_config(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_run_config(broken)


def test_swag_without_finetune_needs_checkpoints():
    config = RunConfig().with_value('finetune', 'enabled', False)
    assert any('swag_checkpoints' in error for error in config.validate())
    assert config.with_value('posterior', 'kind', 'isotropic').validate() == []


def test_sweep_axis_casts_model_count():
    config = RunConfig().with_axis('M', 5.0)
    assert config.attack.ensemble_size == 5 and isinstance(config.attack.ensemble_size, int)
    with pytest.raises(ConfigError):
        RunConfig().with_axis('temperature', 1.0)


def test_sweep_axis_rejects_fractional_model_count():
    with pytest.raises(ConfigError):
        RunConfig().with_axis('M', 2.5)
    assert RunConfig().with_axis('M', 3.0).attack.ensemble_size == 3


def test_duplicate_models_collide():
    config = RunConfig().with_value('models', 'victims', ['cnn_substitute'])
    with pytest.raises(ArtifactIOError):
        config.check_collisions()
