# tests/test_posterior.py
"""
Pruebas de posteriors isotrópica y SWAG, radio de densidad y archivos .btpost
"""
import numpy as np
import pytest

from core.errors import DataFormatError, PosteriorError, ShapeError
from core.models.checkpoint import save_checkpoint
from core.models.model_zoo import ParamVector
from core.posterior.posterior import (IsotropicPosterior, SwagMoments, SwagPosterior, density_radius,
                                      density_radius_log, log_density, sample, sample_many,
                                      swag_finalize, swag_from_checkpoints, swag_from_snapshots,
                                      swag_update, with_sigma)
from core.posterior.posterior_io import POSTERIOR_MAGIC, load_posterior, save_posterior
from utils.binary_format import write_artifact


def _vector(values, spec_id='model'):
    return ParamVector(np.asarray(values, dtype=np.float64), spec_id)


def test_zero_sigma_sample_returns_mean_bit_exact():
    mean = _vector(np.random.default_rng(0).normal(size=50))
    drawn = sample(IsotropicPosterior(mean, 0.0), np.random.default_rng(1))
    assert drawn.values.tobytes() == mean.values.tobytes()
    assert drawn.spec_id == 'model'


def test_isotropic_sample_variance_matches_sigma():
    posterior = IsotropicPosterior(_vector(np.zeros(200)), 0.1)
    draws = np.stack([p.values for p in sample_many(posterior, np.random.default_rng(2), 500)])
    assert draws.var(axis=0).mean() == pytest.approx(0.01, rel=0.05)
    assert abs(draws.mean()) < 0.01


def test_swag_sample_variance_matches_scaled_diagonal_plus_beta():
    rng = np.random.default_rng(31)
    mean = _vector(rng.normal(size=16))
    posterior = SwagPosterior(mean, rng.uniform(1e-3, 1e-2, size=16), scale=1.5, beta=1e-3)
    expected = 1.5 * posterior.diag_var + 1e-3

    draws = np.stack([p.values for p in sample_many(posterior, np.random.default_rng(32), 100_000)])

    np.testing.assert_allclose(draws.var(axis=0), expected, rtol=0.05)
    assert np.all(np.abs(draws.mean(axis=0) - mean.values) <= 5 * np.sqrt(expected / 100_000))


def test_sampling_consumes_the_same_stream_for_any_sigma():
    """Dos posteriors con distinto σ avanzan el generador igual"""
    mean = _vector(np.ones(10))
    rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(3)
    sample(IsotropicPosterior(mean, 0.0), rng_a)
    sample(IsotropicPosterior(mean, 0.5), rng_b)
    assert rng_a.standard_normal() == rng_b.standard_normal()


def test_negative_sigma_is_rejected():
    with pytest.raises(PosteriorError):
        IsotropicPosterior(_vector(np.zeros(3)), -0.1)


def test_swag_moments_match_sample_statistics():
    snapshots = np.random.default_rng(4).normal(size=(6, 12))
    posterior = swag_from_snapshots([_vector(s) for s in snapshots], scale=1.0, beta=0.0, var_floor=0.0)

    np.testing.assert_allclose(posterior.mean.values, snapshots.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(posterior.diag_var, snapshots.var(axis=0), atol=1e-12)
    assert posterior.kind == 'swag_diag'


def test_swag_moments_do_not_depend_on_snapshot_order():
    snapshots = np.random.default_rng(33).normal(size=(7, 9))
    forward = SwagMoments.empty(9, 'model')
    backward = SwagMoments.empty(9, 'model')
    for row, reversed_row in zip(snapshots, snapshots[::-1]):
        forward = swag_update(forward, _vector(row))
        backward = swag_update(backward, _vector(reversed_row))

    np.testing.assert_allclose(forward.running_mean, backward.running_mean, atol=1e-10)
    np.testing.assert_allclose(forward.running_sq_mean, backward.running_sq_mean, atol=1e-10)
    np.testing.assert_allclose(forward.running_mean, snapshots.mean(axis=0), atol=1e-10)


def test_swag_variance_combines_scale_floor_and_beta():
    snapshot = _vector(np.linspace(-1, 1, 8))
    moments = SwagMoments.empty(8, 'model')
    for _ in range(3):
        moments = swag_update(moments, snapshot)
    assert moments.count == 3

    posterior = swag_finalize(moments, scale=2.0, beta=0.25, var_floor=1e-6)
    np.testing.assert_allclose(posterior.diag_var, 1e-6)
    np.testing.assert_allclose(posterior.variance(), 2.0 * 1e-6 + 0.25)

    inflated = with_sigma(posterior, 0.1)
    assert inflated.beta == pytest.approx(0.01)
    assert with_sigma(IsotropicPosterior(snapshot, 0.1), 0.3).sigma == 0.3


def test_swag_requires_two_snapshots_and_matching_shapes():
    moments = swag_update(SwagMoments.empty(4, 'model'), _vector(np.zeros(4)))
    with pytest.raises(PosteriorError):
        swag_finalize(moments)
    with pytest.raises(ShapeError):
        swag_update(moments, _vector(np.zeros(5)))
    with pytest.raises(PosteriorError):
        swag_update(moments, _vector(np.zeros(4), 'other'))
    with pytest.raises(PosteriorError):
        swag_from_snapshots([])


def test_swag_from_checkpoints(tmp_path):
    paths = [save_checkpoint(tmp_path / f"m{i}.ckpt", _vector(np.full(5, float(i)))) for i in range(3)]
    posterior = swag_from_checkpoints(paths, scale=1.0, var_floor=0.0)
    np.testing.assert_allclose(posterior.mean.values, 1.0)
    np.testing.assert_allclose(posterior.diag_var, 2.0 / 3.0)

    foreign = save_checkpoint(tmp_path / "other.ckpt", _vector(np.zeros(5), 'other'))
    with pytest.raises(PosteriorError):
        swag_from_checkpoints(paths[:1] + [foreign])
    with pytest.raises(PosteriorError):
        swag_from_checkpoints(paths[:1])


def test_density_radius_inverts_log_density():
    assert density_radius(1.0, 1, np.exp(log_density(1.0, 1.0, 1))) == pytest.approx(1.0)
    assert density_radius_log(0.5, 3, log_density(2.0, 0.5, 3)) == pytest.approx(2.0)
    assert density_radius_log(0.01, 10_000, log_density(0.3, 0.01, 10_000)) == pytest.approx(0.3)


def test_density_radius_at_peak_and_above():
    peak = log_density(0.0, 0.2, 4)
    assert density_radius_log(0.2, 4, peak) == 0.0
    with pytest.raises(PosteriorError):
        density_radius_log(0.2, 4, peak + 1.0)
    with pytest.raises(PosteriorError):
        density_radius(0.2, 4, 0.0)


def test_density_radius_decreases_as_threshold_grows():
    peak = log_density(0.0, 0.3, 5)
    thresholds = peak - np.array([20.0, 8.0, 3.0, 1.0, 0.1, 1e-4])
    radii = [density_radius_log(0.3, 5, value) for value in thresholds]
    assert all(a > b for a, b in zip(radii, radii[1:]))
    assert radii[-1] > 0.0


def test_posterior_files_preserve_both_kinds(tmp_path):
    mean = _vector(np.random.default_rng(5).normal(size=30), 'cnn_substitute')
    isotropic = IsotropicPosterior(mean, 0.009)
    swag = SwagPosterior(mean, np.full(30, 1e-4), scale=1.5, beta=4e-6)

    loaded_iso = load_posterior(save_posterior(tmp_path / "iso.btpost", isotropic))
    loaded_swag = load_posterior(save_posterior(tmp_path / "swag.btpost", swag))

    assert loaded_iso.kind == 'isotropic' and loaded_iso.sigma == 0.009
    assert loaded_iso.mean.values.tobytes() == mean.values.tobytes()
    assert loaded_iso.spec_id == 'cnn_substitute'
    assert loaded_swag.kind == 'swag_diag'
    assert (loaded_swag.scale, loaded_swag.beta) == (1.5, 4e-6)
    np.testing.assert_array_equal(loaded_swag.diag_var, swag.diag_var)


def test_unknown_posterior_kind_is_rejected(tmp_path):
    path = write_artifact(tmp_path / "odd.btpost", POSTERIOR_MAGIC, {'kind': 'laplace'}, [np.zeros(3)])
    with pytest.raises(DataFormatError):
        load_posterior(path)
