# tests/test_attack_engine.py
"""
Pruebas de FGSM / I-FGSM determinista y bayesiano
"""
import numpy as np
import pytest

from conftest import TINY_CLASSES, TINY_SHAPE
from core.attack.attack_engine import (ADV_MAGIC, AttackJob, AttackMethod, SamplingMode,
                                       ensemble_input_grad, fgsm, ifgsm, load_adv_batch, per_sample_losses,
                                       project, run_attack, save_adv_batch)
from core.errors import ConfigError, ShapeError
from core.evaluation.eval_report import success_rate
from core.models.model_types import build_spec
from core.models.model_zoo import ParamVector, init_params, loss_and_input_grad, predict_labels
from core.posterior.posterior import IsotropicPosterior, SwagPosterior, sample

EPS = 8 / 255


def _job(ds, **overrides):
    settings = dict(x=ds.images[:10], y=ds.labels[:10], epsilon_budget=EPS, step_size=2 / 255,
                    iterations=5, rng_seed=21)
    settings.update(overrides)
    return AttackJob(**settings)


def test_projection_stays_in_ball_and_box():
    x0 = np.array([0.0, 0.5, 1.0])
    projected = project(np.array([-1.0, 0.9, 0.95]), x0, 0.1)
    np.testing.assert_allclose(projected, [0.0, 0.6, 0.95])


def test_adversarial_examples_respect_budget(cnn_spec, cnn_params, tiny_test):
    job = _job(tiny_test, ensemble_size=2)
    adv = ifgsm(cnn_spec, IsotropicPosterior(cnn_params, 0.01), job)

    assert adv.x_adv.shape == job.x.shape
    assert adv.max_perturbation(job.x) <= EPS + 1e-12
    assert adv.x_adv.min() >= 0.0 and adv.x_adv.max() <= 1.0
    assert adv.iterations_run == 5


def test_zero_sigma_posterior_equals_deterministic_attack(cnn_spec, cnn_params, tiny_test):
    deterministic = ifgsm(cnn_spec, cnn_params, _job(tiny_test, mode='deterministic'))
    bayesian = ifgsm(cnn_spec, IsotropicPosterior(cnn_params, 0.0), _job(tiny_test, ensemble_size=3))
    assert bayesian.x_adv.tobytes() == deterministic.x_adv.tobytes()

    zero_swag = SwagPosterior(cnn_params, np.zeros(len(cnn_params)), scale=1.0, beta=0.0)
    swag = ifgsm(cnn_spec, zero_swag, _job(tiny_test, sampling='fixed-set', ensemble_size=2))
    assert swag.x_adv.tobytes() == deterministic.x_adv.tobytes()


def test_zero_sigma_ensemble_gradient_equals_single_model(cnn_spec, cnn_params, tiny_test):
    x, y = tiny_test.images[:4], tiny_test.labels[:4]
    _, single = loss_and_input_grad(cnn_spec, cnn_params, x, y)
    averaged = ensemble_input_grad(cnn_spec, IsotropicPosterior(cnn_params, 0.0), x, y, 5,
                                   np.random.default_rng(0))
    assert averaged.tobytes() == single.tobytes()
    with pytest.raises(ConfigError):
        ensemble_input_grad(cnn_spec, cnn_params, x, y, 0, np.random.default_rng(0))


def test_ensemble_gradient_matches_explicit_sampled_models(cnn_spec, cnn_params, tiny_test):
    x, y = tiny_test.images[:4], tiny_test.labels[:4]
    posterior = IsotropicPosterior(cnn_params, 0.05)
    averaged = ensemble_input_grad(cnn_spec, posterior, x, y, 3, np.random.default_rng(4))

    rng = np.random.default_rng(4)
    models = [sample(posterior, rng) for _ in range(3)]
    grads = [loss_and_input_grad(cnn_spec, params, x, y)[1] for params in models]
    np.testing.assert_allclose(averaged, np.mean(grads, axis=0), atol=1e-12)
    assert not np.allclose(grads[0], grads[1])


def test_fgsm_is_a_single_step_of_size_epsilon(cnn_spec, cnn_params, tiny_test):
    job = _job(tiny_test, mode='deterministic')
    single = fgsm(cnn_spec, cnn_params, job)
    reference = ifgsm(cnn_spec, cnn_params, _job(tiny_test, mode='deterministic', iterations=1,
                                                 step_size=EPS))
    assert single.iterations_run == 1
    np.testing.assert_array_equal(single.x_adv, reference.x_adv)


def test_zero_budget_leaves_inputs_unchanged(cnn_spec, cnn_params, tiny_test):
    job = _job(tiny_test, epsilon_budget=0.0)
    for attack in (fgsm, ifgsm):
        adv = attack(cnn_spec, IsotropicPosterior(cnn_params, 0.05), job)
        np.testing.assert_array_equal(adv.x_adv, job.x)


def test_random_jobs_respect_budget_and_box(linear_spec, linear_params):
    rng = np.random.default_rng(40)
    for trial in range(1000):
        epsilon = float(rng.uniform(0.0, 0.2))
        job = AttackJob(x=rng.uniform(size=(2,) + TINY_SHAPE), y=rng.integers(0, TINY_CLASSES, size=2),
                        epsilon_budget=epsilon, step_size=float(rng.uniform(1e-3, 0.1)),
                        iterations=int(rng.integers(1, 4)), ensemble_size=int(rng.integers(1, 3)),
                        mode=rng.choice(['deterministic', 'bayesian']),
                        sampling=rng.choice(['per-iteration', 'fixed-set']), rng_seed=trial)
        source = IsotropicPosterior(linear_params, float(rng.choice([0.0, 0.05])))
        adv = (fgsm if trial % 2 else ifgsm)(linear_spec, source, job)

        assert adv.max_perturbation(job.x) <= epsilon + 1e-12
        assert adv.x_adv.min() >= 0.0 and adv.x_adv.max() <= 1.0


def test_fgsm_follows_positive_input_gradient():
    """Pesos que hacen ∂L/∂x > 0 en todo píxel: x_adv = min(x + ε, 1)"""
    spec = build_spec('linear', TINY_SHAPE, TINY_CLASSES)
    values = np.zeros(spec.parameter_count)
    values[:64 * TINY_CLASSES].reshape(64, TINY_CLASSES)[:, 0] = -1.0
    params = ParamVector(values, spec.id)

    x = np.random.default_rng(41).uniform(size=(4,) + TINY_SHAPE)
    x[0, 0, 0] = 0.99
    y = np.zeros(4, dtype=np.int64)
    _, grad = loss_and_input_grad(spec, params, x, y)
    assert np.all(grad > 0)

    adv = fgsm(spec, params, AttackJob(x=x, y=y, epsilon_budget=EPS, mode='deterministic'))
    np.testing.assert_array_equal(adv.x_adv, np.minimum(x + EPS, 1.0))


def test_success_rate_grows_with_budget():
    """Modelo lineal de dos clases: el margen sólo crece con ε"""
    spec = build_spec('linear', TINY_SHAPE, 2)
    params = init_params(spec, seed=42)
    x = np.random.default_rng(43).uniform(size=(200,) + TINY_SHAPE)
    y = predict_labels(spec, params, x)

    rates = []
    for epsilon in (0.0, 2 / 255, 4 / 255, 8 / 255):
        job = AttackJob(x=x, y=y, epsilon_budget=epsilon, step_size=1 / 255, iterations=10,
                        mode='deterministic', rng_seed=44)
        rates.append(success_rate(spec, params, ifgsm(spec, params, job).x_adv, y))

    assert rates[0] == 0.0
    assert all(a <= b for a, b in zip(rates, rates[1:]))


def test_attack_never_decreases_loss_of_convex_model(linear_spec, linear_params, tiny_test):
    job = _job(tiny_test, mode='deterministic', iterations=10)
    adv = ifgsm(linear_spec, linear_params, job)
    clean = per_sample_losses(linear_spec, [linear_params], job.x, job.y)
    assert np.all(adv.final_losses >= clean - 1e-12)
    assert adv.final_losses.mean() > clean.mean()


def test_sampling_modes_control_model_draws(cnn_spec, cnn_params, tiny_test):
    posterior = IsotropicPosterior(cnn_params, 0.02)

    fixed = ifgsm(cnn_spec, posterior, _job(tiny_test, sampling=SamplingMode.FIXED_SET, ensemble_size=3))
    assert len(set(fixed.sample_digests)) == 1
    assert len(set(fixed.sample_digests[0])) == 3

    fresh = ifgsm(cnn_spec, posterior, _job(tiny_test, ensemble_size=2))
    assert len(set(fresh.sample_digests)) == len(fresh.sample_digests)


def test_attack_is_reproducible_and_thread_independent(cnn_spec, cnn_params, tiny_test):
    posterior = IsotropicPosterior(cnn_params, 0.02)
    job = AttackJob(x=tiny_test.images, y=tiny_test.labels, iterations=3, ensemble_size=2, rng_seed=5)

    serial = run_attack(cnn_spec, posterior, job, AttackMethod.IFGSM, batch_size=4, threads=1)
    parallel = run_attack(cnn_spec, posterior, job, AttackMethod.IFGSM, batch_size=4, threads=4)
    assert serial.x_adv.tobytes() == parallel.x_adv.tobytes()
    assert serial.sample_digests == parallel.sample_digests

    other_seed = run_attack(cnn_spec, posterior, AttackJob(x=job.x, y=job.y, iterations=3,
                                                           ensemble_size=2, rng_seed=6), batch_size=4)
    assert serial.x_adv.tobytes() != other_seed.x_adv.tobytes()


def test_invalid_jobs_are_rejected(cnn_spec, cnn_params, tiny_test):
    with pytest.raises(ConfigError):
        ifgsm(cnn_spec, cnn_params, _job(tiny_test, ensemble_size=0))
    with pytest.raises(ConfigError):
        ifgsm(cnn_spec, cnn_params, _job(tiny_test, epsilon_budget=1.5))
    with pytest.raises(ConfigError):
        ifgsm(cnn_spec, cnn_params, _job(tiny_test, y=tiny_test.labels[:3]))
    with pytest.raises(ShapeError):
        ifgsm(cnn_spec, cnn_params, AttackJob(x=np.zeros((2, 1, 4, 4)), y=[0, 1]))
    with pytest.raises(ValueError):
        _job(tiny_test, sampling='sometimes')


def test_adversarial_batch_files(tmp_path, cnn_spec, cnn_params, tiny_test):
    job = _job(tiny_test, mode='deterministic')
    adv = ifgsm(cnn_spec, cnn_params, job)
    manifest_path, tensor_path = save_adv_batch(tmp_path / "batch", adv, job, extra={'source': 'cnn'})

    assert tensor_path.read_bytes().startswith(ADV_MAGIC)
    x_adv, y, manifest = load_adv_batch(tmp_path / "batch")
    assert x_adv.tobytes() == adv.x_adv.tobytes()
    np.testing.assert_array_equal(y, job.y)
    assert manifest['job']['mode'] == 'deterministic'
    assert manifest['source'] == 'cnn'
    assert manifest_path.name == "batch.json"
