# tests/test_trainer.py
"""
Pruebas del entrenamiento SGD
"""
from types import SimpleNamespace

import numpy as np
import pytest

from core.data.dataset import gen_synthetic
from core.errors import ConfigError, DivergenceError, ShapeError
from core.models.checkpoint import load_checkpoint
from core.models.model_types import build_spec
from core.training.trainer import TrainConfig, sgd_step, train, write_curve
from utils.helpers import read_csv
from utils.seed_generator import SeedGenerator


def test_sgd_step_follows_momentum_and_coupled_decay():
    cfg = SimpleNamespace(learning_rate=0.1, momentum=0.5, weight_decay=0.01)
    params = np.array([1.0, -2.0])
    grad = np.array([0.5, 0.5])
    velocity = np.array([2.0, 0.0])

    new_params, new_velocity = sgd_step(params, grad, velocity, cfg)

    expected_velocity = 0.5 * velocity + grad + 0.01 * params
    np.testing.assert_allclose(new_velocity, expected_velocity)
    np.testing.assert_allclose(new_params, params - 0.1 * expected_velocity)


def test_sgd_step_rejects_mismatched_shapes():
    cfg = TrainConfig()
    with pytest.raises(ShapeError):
        sgd_step(np.zeros(3), np.zeros(2), np.zeros(3), cfg)


def test_training_reduces_loss_and_is_reproducible(linear_spec, tiny_train, tiny_test):
    cfg = TrainConfig(epochs=8, batch_size=8, learning_rate=0.1, seed=4)
    first = train(linear_spec, tiny_train, cfg, test_ds=tiny_test)
    second = train(linear_spec, tiny_train, cfg, test_ds=tiny_test)

    assert len(first.curve) == 8
    assert first.curve[-1].train_loss < first.curve[0].train_loss
    assert first.final_test_accuracy is not None
    np.testing.assert_array_equal(first.params.values, second.params.values)


def test_zero_epochs_keeps_initial_parameters(linear_spec, linear_params, tiny_train):
    result = train(linear_spec, tiny_train, TrainConfig(epochs=0), start_params=linear_params)
    np.testing.assert_array_equal(result.params.values, linear_params.values)
    assert result.curve == []
    assert result.final_test_accuracy is None


def test_zero_learning_rate_keeps_initial_parameters(linear_spec, linear_params, tiny_train):
    cfg = TrainConfig(epochs=3, batch_size=8, learning_rate=0.0, weight_decay=0.0)
    result = train(linear_spec, tiny_train, cfg, start_params=linear_params)
    np.testing.assert_array_equal(result.params.values, linear_params.values)
    assert len(result.curve) == 3


def test_checkpoints_and_curve_are_written(tmp_path, linear_spec, tiny_train, tiny_test):
    cfg = TrainConfig(epochs=4, batch_size=8, checkpoint_every=2, seed=2)
    result = train(linear_spec, tiny_train, cfg, test_ds=tiny_test, checkpoint_dir=tmp_path)

    names = [path.name for path in result.checkpoints]
    assert names == ['linear_epoch002.ckpt', 'linear_epoch004.ckpt', 'linear.ckpt']

    final, header = load_checkpoint(tmp_path / "linear.ckpt", linear_spec)
    np.testing.assert_array_equal(final.values, result.params.values)
    assert header['seed'] == 2

    rows = read_csv(write_curve(tmp_path / "curve.csv", result.curve))
    assert [row['epoch'] for row in rows] == ['1', '2', '3', '4']
    assert set(rows[0]) == {'epoch', 'train_loss', 'test_acc'}


def test_divergence_reports_last_good_parameters(linear_spec, tiny_train):
    cfg = TrainConfig(epochs=5, batch_size=8, learning_rate=1e300)
    with pytest.raises(DivergenceError) as info:
        train(linear_spec, tiny_train, cfg)
    assert info.value.last_good_params is not None
    assert np.all(np.isfinite(info.value.last_good_params))


def test_invalid_configuration_is_rejected(linear_spec, tiny_train):
    with pytest.raises(ConfigError):
        train(linear_spec, tiny_train, TrainConfig(batch_size=0))
    with pytest.raises(ConfigError):
        train(linear_spec, tiny_train.subset([]), TrainConfig())


def test_default_config_learns_default_synthetic_data():
    """MLP de 2 capas, 20 épocas con TrainConfig por defecto: >= 90% en prueba"""
    train_ds = gen_synthetic(4, 150, 32, seed=0)
    test_ds = gen_synthetic(4, 50, 32, seed=0, split='test')
    spec = build_spec('mlp_shallow', train_ds.input_shape, 4)
    seed = SeedGenerator.derive(1, SeedGenerator.STREAM_TRAIN, SeedGenerator.text_key(spec.id))

    result = train(spec, train_ds, TrainConfig(seed=seed), test_ds=test_ds)

    assert len(result.curve) == 20
    assert result.curve[-1].train_loss < result.curve[0].train_loss
    assert result.final_test_accuracy >= 0.9
