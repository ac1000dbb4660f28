"""Tests for the bundled state-space models."""

import math

import numpy as np
import pytest
from scipy import integrate

from blockpf.core.exceptions import UnsupportedModelError
from blockpf.models.params import GrowthParams, LgssParams, Lorenz63Params, ModelName
from blockpf.services.state_space import (
    GrowthModel,
    LinearGaussianModel,
    Lorenz63Model,
    StateSpaceModel,
    create_model,
    describe_model,
)

ALL_MODELS = [LinearGaussianModel(), GrowthModel(), GrowthModel(GrowthParams(sigma_u=2.0, sigma_v=0.1)), Lorenz63Model()]


class LaplaceNoiseModel(StateSpaceModel):
    """Minimal model without a closed-form CDF."""

    def prior_sample(self, rng, size=None):
        return rng.standard_normal((self.dx,) if size is None else (size, self.dx))

    def drift(self, x, t):
        return self.as_states(x)

    def transition_sample(self, x, t, rng):
        return self.drift(x, t)

    def observation_mean(self, x, t):
        return self.as_states(x)[..., 0]

    def log_likelihood(self, y, x, t):
        return -np.abs(y - self.observation_mean(x, t)) - math.log(2.0)

    def observation_sample(self, x, t, rng):
        mean = self.observation_mean(x, t)
        return mean + rng.laplace(size=np.shape(mean))


def test_lgss_degenerate_prior(rng):
    model = LinearGaussianModel(LgssParams(prior_mean=0.0, prior_std=1e-12))
    assert model.prior_sample(rng)[0] == pytest.approx(0.0, abs=1e-9)


def test_lgss_prior_moments(rng):
    draws = LinearGaussianModel().prior_sample(rng, size=100_000)[:, 0]
    assert -0.02 <= draws.mean() <= 0.02
    assert 0.97 <= draws.var() <= 1.03


def test_growth_prior_shape(rng):
    x0 = GrowthModel().prior_sample(rng)
    assert x0.shape == (1,)
    assert np.isfinite(x0).all()


def test_lgss_transition_deterministic_limit(rng):
    model = LinearGaussianModel(LgssParams(a=1.0, sigma_u=1e-12))
    assert model.transition_sample(np.array([3.0]), 1, rng)[0] == pytest.approx(3.0, abs=1e-9)


def test_growth_drift_at_zero():
    assert GrowthModel().drift(0.0, 1)[0] == pytest.approx(8.0 * math.cos(0.4))
    assert GrowthModel().drift(0.0, 1)[0] == pytest.approx(7.3684, abs=1e-4)


def test_lgss_transition_variance(rng):
    draws = LinearGaussianModel().transition_sample(np.zeros((100_000, 1)), 1, rng)[:, 0]
    assert 0.49 <= draws.var() <= 0.51


def test_likelihood_values():
    assert float(GrowthModel().likelihood(0.0, 0.0, 1)) == pytest.approx(1.0 / (0.5 * math.sqrt(2 * math.pi)))
    assert float(GrowthModel().likelihood(0.2, 2.0, 1)) == pytest.approx(1.0 / (0.5 * math.sqrt(2 * math.pi)))
    assert float(LinearGaussianModel().likelihood(1.0, 0.0, 1)) == pytest.approx(0.2420, abs=1e-4)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_cdf_at_observation_mean_is_half(model, rng):
    x = model.prior_sample(rng)
    y = float(model.observation_mean(x, 1))
    assert model.likelihood_cdf(y, x, 1) == pytest.approx(0.5)


def test_lgss_cdf_values():
    model = LinearGaussianModel()
    assert model.likelihood_cdf(1.96, 0.0, 1) == pytest.approx(0.975, abs=1e-3)
    assert model.likelihood_cdf(-1e9, 0.0, 1) < 1e-15
    assert model.likelihood_cdf(1e9, 0.0, 1) == pytest.approx(1.0)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_cdf_is_nondecreasing(model, rng):
    x = model.prior_sample(rng)
    grid = np.linspace(-100.0, 100.0, 2001)
    values = np.array([model.likelihood_cdf(y, x, 1) for y in grid])
    assert np.all(np.diff(values) >= 0.0)
    assert values[0] < 1e-12 and values[-1] > 1.0 - 1e-12


def test_growth_noiseless_observation(rng):
    model = GrowthModel(GrowthParams(sigma_v=1e-12))
    assert model.observation_sample(np.array([2.0]), 1, rng) == pytest.approx(0.2, abs=1e-9)


def test_lgss_observation_mean(rng):
    draws = LinearGaussianModel().observation_sample(np.full((100_000, 1), 5.0), 1, rng)
    assert 4.98 <= draws.mean() <= 5.02


def test_lorenz_observation_is_scalar(rng):
    model = Lorenz63Model()
    y = model.observation_sample(model.prior_sample(rng), 1, rng)
    assert np.ndim(y) == 0
    assert np.isfinite(y)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_likelihood_integrates_to_one(model, rng):
    for _ in range(3):
        x = model.prior_sample(rng)
        mean = float(model.observation_mean(x, 1))
        grid = np.linspace(mean - 30.0, mean + 30.0, 600_001)
        area = integrate.trapezoid(model.likelihood(grid, x, 1), grid)
        assert area == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_cdf_derivative_matches_likelihood(model, rng):
    h = 1e-4
    for _ in range(20):
        x = model.prior_sample(rng)
        y = float(model.observation_mean(x, 1)) + model.obs_std * rng.standard_normal()
        derivative = (model.likelihood_cdf(y + h, x, 1) - model.likelihood_cdf(y - h, x, 1)) / (2 * h)
        assert derivative == pytest.approx(model.likelihood(y, x, 1), rel=1e-3)


def test_growth_drift_is_reproducible():
    model = GrowthModel()

    def iterate():
        x = np.array([0.3])
        for t in range(1, 51):
            x = model.drift(x, t)
        return x

    assert np.array_equal(iterate(), iterate())


def test_lorenz_integrator_first_order():
    model = Lorenz63Model(Lorenz63Params(sigma2_state=0.0))
    x0 = np.asarray(model.params.prior_mean)
    delta = model.params.delta
    n = model.params.n_substeps
    coarse = model.integrate(x0, n, delta)
    medium = model.integrate(x0, 2 * n, delta / 2)
    fine = model.integrate(x0, 4 * n, delta / 4)
    ratio = np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine)
    assert 1.4 <= ratio <= 2.6


def test_lorenz_substeps():
    assert Lorenz63Params().n_substeps == 200
    with pytest.raises(ValueError):
        Lorenz63Params(t_obs=0.2, delta=0.03)


def test_unsupported_cdf():
    model = LaplaceNoiseModel()
    assert not model.supports_cdf
    with pytest.raises(UnsupportedModelError):
        model.likelihood_cdf(0.0, 0.0, 1)


def test_create_model_defaults():
    growth2 = create_model(ModelName.GROWTH2)
    assert growth2.name == "growth2"
    assert growth2.params.sigma_u == 2.0 and growth2.params.sigma_v == 0.1
    assert create_model("growth1", sigma_v=0.1).obs_std == 0.1
    assert isinstance(create_model("lorenz63"), Lorenz63Model)
    with pytest.raises(ValueError):
        create_model("lgss", rho=3.0)


def test_describe_model():
    info = describe_model(LinearGaussianModel())
    assert info["name"] == "lgss"
    assert info["supports_cdf"] is True
    assert info["params"]["a"] == 0.9
