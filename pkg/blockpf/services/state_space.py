"""
State-space models for blockpf.

Defines the model abstraction used by the particle filter (prior, transition
kernel, likelihood, observation CDF and observation sampler) and the three
bundled benchmark models: scalar linear-Gaussian, stochastic growth and a
stochastic Lorenz 63 system observed through its first coordinate.

All operations are vectorised over a leading particle axis: a state is an
array of shape (dx,), a particle cloud has shape (M, dx), and observation
quantities drop the trailing state axis. Models are immutable; randomness
always comes from an explicitly passed numpy Generator.
"""

from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from scipy import special, stats

from blockpf.core.exceptions import UnsupportedModelError
from blockpf.models.params import (
    GrowthParams,
    LgssParams,
    Lorenz63Params,
    ModelName,
    ModelParams,
    build_params,
)

ArrayLike = Union[float, np.ndarray]


class StateSpaceModel(ABC):
    """
    A discrete-time Markov state-space model with scalar observations.

    Subclasses provide the noise-free drift (a test hook for deterministic
    checks), the randomised transition and the observation density.
    """

    name: str = "model"
    dx: int = 1

    def as_states(self, x: ArrayLike) -> np.ndarray:
        """Coerce x to a float array whose last axis is the state dimension."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.shape[-1] != self.dx:
            raise ValueError(f"{self.name} states have dimension {self.dx}, got shape {arr.shape}")
        return arr

    @abstractmethod
    def prior_sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Draw one state (shape (dx,)) or `size` states (shape (size, dx)) from p(x_0)."""

    @abstractmethod
    def drift(self, x: ArrayLike, t: int) -> np.ndarray:
        """Transition with the state noise forced to zero."""

    @abstractmethod
    def transition_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        """Draw x_t ~ p(x_t | x_{t-1} = x)."""

    @abstractmethod
    def observation_mean(self, x: ArrayLike, t: int) -> np.ndarray:
        """Noise-free observation h(x)."""

    @abstractmethod
    def log_likelihood(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        """log p(y | x)."""

    @abstractmethod
    def observation_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        """Draw y ~ p(y | x)."""

    def likelihood(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        """Observation density p(y | x)."""
        return np.exp(self.log_likelihood(y, x, t))

    def likelihood_cdf(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        """P(Y <= y | x); only models with a closed-form noise CDF support it."""
        raise UnsupportedModelError(f"{self.name} has no closed-form observation CDF")

    @property
    def supports_cdf(self) -> bool:
        return False


class AdditiveGaussianModel(StateSpaceModel):
    """Models whose observation is y = h(x) + v with v ~ N(0, obs_std^2)."""

    obs_std: float = 1.0

    def log_likelihood(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        return stats.norm.logpdf(y, loc=self.observation_mean(x, t), scale=self.obs_std)

    def likelihood(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        return stats.norm.pdf(y, loc=self.observation_mean(x, t), scale=self.obs_std)

    def likelihood_cdf(self, y: float, x: ArrayLike, t: int) -> np.ndarray:
        return special.ndtr((y - self.observation_mean(x, t)) / self.obs_std)

    def observation_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        mean = self.observation_mean(x, t)
        return mean + self.obs_std * rng.standard_normal(np.shape(mean))

    @property
    def supports_cdf(self) -> bool:
        return True


# Bundled models
class LinearGaussianModel(AdditiveGaussianModel):
    """x_t = a x_{t-1} + u_t, y_t = x_t + v_t."""

    name = ModelName.LGSS.value
    dx = 1

    def __init__(self, params: Optional[LgssParams] = None):
        self.params = params or LgssParams()
        self.obs_std = self.params.sigma_v

    def prior_sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dx,) if size is None else (size, self.dx)
        return self.params.prior_mean + self.params.prior_std * rng.standard_normal(shape)

    def drift(self, x: ArrayLike, t: int) -> np.ndarray:
        return self.params.a * self.as_states(x)

    def transition_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        mean = self.drift(x, t)
        return mean + self.params.sigma_u * rng.standard_normal(mean.shape)

    def observation_mean(self, x: ArrayLike, t: int) -> np.ndarray:
        return self.as_states(x)[..., 0]


class GrowthModel(AdditiveGaussianModel):
    """
    Stochastic growth model.

    x_t = x_{t-1}/2 + 25 x_{t-1}/(1 + x_{t-1}^2) + 8 cos(phi t) + u_t
    y_t = x_t^2 / 20 + v_t
    """

    dx = 1

    def __init__(self, params: Optional[GrowthParams] = None, name: str = ModelName.GROWTH1.value):
        self.params = params or GrowthParams()
        self.obs_std = self.params.sigma_v
        self.name = name

    def prior_sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dx,) if size is None else (size, self.dx)
        return rng.standard_normal(shape)

    def drift(self, x: ArrayLike, t: int) -> np.ndarray:
        x = self.as_states(x)
        return x / 2.0 + 25.0 * x / (1.0 + x ** 2) + 8.0 * np.cos(self.params.phi * t)

    def transition_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        mean = self.drift(x, t)
        return mean + self.params.sigma_u * rng.standard_normal(mean.shape)

    def observation_mean(self, x: ArrayLike, t: int) -> np.ndarray:
        return self.as_states(x)[..., 0] ** 2 / 20.0


# Lorenz 63
def lorenz63_rhs(x: np.ndarray, sigma: float, rho: float, beta: float) -> np.ndarray:
    """Lorenz 63 vector field, vectorised over leading axes."""
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        (sigma * (x2 - x1), x1 * (rho - x3) - x2, x1 * x2 - beta * x3),
        axis=-1,
    )


def euler_maruyama(
    x: np.ndarray,
    rhs: Callable[[np.ndarray], np.ndarray],
    n_steps: int,
    delta: float,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Integrate dx = rhs(x) dt + noise dW with n_steps Euler(-Maruyama) steps of size delta."""
    x = np.array(x, dtype=float, copy=True)
    stochastic = noise_std > 0.0 and rng is not None
    for _ in range(n_steps):
        x = x + delta * rhs(x)
        if stochastic:
            x += noise_std * rng.standard_normal(x.shape)
    return x


class Lorenz63Model(AdditiveGaussianModel):
    """
    Stochastic Lorenz 63 system.

    Between observations the state is integrated with t_obs/delta
    Euler-Maruyama steps, each adding N(0, sigma2_state * delta) noise per
    coordinate. The observation is the first coordinate plus N(0, sigma2_obs).
    """

    name = ModelName.LORENZ63.value
    dx = 3

    def __init__(self, params: Optional[Lorenz63Params] = None):
        self.params = params or Lorenz63Params()
        self.obs_std = float(np.sqrt(self.params.sigma2_obs))
        self._prior_mean = np.asarray(self.params.prior_mean, dtype=float)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        return lorenz63_rhs(x, p.sigma, p.rho, p.beta)

    def integrate(
        self,
        x: ArrayLike,
        n_steps: int,
        delta: Optional[float] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        delta = self.params.delta if delta is None else delta
        noise_std = float(np.sqrt(self.params.sigma2_state * delta))
        return euler_maruyama(self.as_states(x), self.rhs, n_steps, delta, noise_std, rng)

    def prior_sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dx,) if size is None else (size, self.dx)
        return self._prior_mean + self.params.prior_std * rng.standard_normal(shape)

    def drift(self, x: ArrayLike, t: int) -> np.ndarray:
        return self.integrate(x, self.params.n_substeps)

    def transition_sample(self, x: ArrayLike, t: int, rng: np.random.Generator) -> np.ndarray:
        return self.integrate(x, self.params.n_substeps, rng=rng)

    def observation_mean(self, x: ArrayLike, t: int) -> np.ndarray:
        return self.as_states(x)[..., 0]


# Factory
def create_model(name: ModelName, params: Optional[ModelParams] = None, **overrides: Any) -> StateSpaceModel:
    """
    Build a bundled model by name.

    Args:
        name: one of lgss, growth1, growth2, lorenz63
        params: explicit parameter set; built from the named defaults when omitted
        **overrides: parameter overrides applied to the named defaults

    Returns:
        The model instance
    """
    name = ModelName(name)
    if params is None:
        params = build_params(name, overrides)
    if name == ModelName.LGSS:
        return LinearGaussianModel(params)
    if name in (ModelName.GROWTH1, ModelName.GROWTH2):
        return GrowthModel(params, name=name.value)
    return Lorenz63Model(params)


def describe_model(model: StateSpaceModel) -> Dict[str, Any]:
    """Summary used in sidecar files and logs."""
    info: Dict[str, Any] = {"name": model.name, "dx": model.dx, "supports_cdf": model.supports_cdf}
    params = getattr(model, "params", None)
    if params is not None:
        info["params"] = params.model_dump()
    return info
