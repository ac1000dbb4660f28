"""
Bootstrap particle filter primitives.

Propagation, likelihood weighting, size-changing multinomial resampling,
posterior-mean estimation and the one-step-ahead predictive mixture of the
observations. ParticleSet and PredictiveMixture are immutable snapshots; every
operation is a pure function of its inputs and the Generator it is given.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from blockpf.core.exceptions import FilterDivergenceError, InvalidCountError
from blockpf.services.state_space import StateSpaceModel


@dataclass(frozen=True)
class ParticleSet:
    """M particles (shape (M, dx)) with their weights at time t."""
    particles: np.ndarray
    weights: np.ndarray
    t: int
    normalized: bool = True

    def __post_init__(self):
        if self.particles.ndim != 2:
            raise ValueError("particles must have shape (M, dx)")
        if len(self.weights) != len(self.particles) or len(self.particles) < 1:
            raise ValueError("weights and particles must have the same length M >= 1")

    @property
    def M(self) -> int:
        return len(self.particles)

    @classmethod
    def uniform(cls, particles: np.ndarray, t: int) -> "ParticleSet":
        m = len(particles)
        return cls(particles=particles, weights=np.full(m, 1.0 / m), t=t, normalized=True)


@dataclass(frozen=True)
class PredictiveMixture:
    """
    Equal-weight mixture p_t^M(y) = (1/M) sum_m p(y | xbar_t^(m)) built from the
    propagated particles before weighting.
    """
    components: np.ndarray
    model: StateSpaceModel
    t: int

    @property
    def M(self) -> int:
        return len(self.components)

    def mean(self) -> float:
        """Predictive mean of the observation."""
        return float(np.mean(self.model.observation_mean(self.components, self.t)))

    def cdf(self, y: float) -> float:
        """Predictive CDF (1/M) sum_m P(Y <= y | xbar^(m))."""
        value = float(np.mean(self.model.likelihood_cdf(y, self.components, self.t)))
        return min(1.0, max(0.0, value))


# Filter steps
def _check_count(name: str, value: int) -> None:
    if value < 1:
        raise InvalidCountError(f"{name} must be >= 1, got {value}")


def initialize(model: StateSpaceModel, M0: int, rng: np.random.Generator) -> ParticleSet:
    """Draw M0 particles from the prior with uniform weights at t=0."""
    _check_count("M0", M0)
    return ParticleSet.uniform(model.prior_sample(rng, size=M0), t=0)


def normalize_log_weights(log_w: np.ndarray, t: int) -> np.ndarray:
    """
    Exponentiate and normalise log-weights after max-subtraction.

    Non-finite entries get zero weight; if none is finite the filter has
    diverged.
    """
    log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    finite = np.isfinite(log_w)
    if not finite.any():
        raise FilterDivergenceError(f"all particle likelihoods are zero or non-finite at t={t}", t=t)
    log_w = np.where(finite, log_w, -np.inf)
    w = np.exp(log_w - log_w[finite].max())
    return w / w.sum()


def propagate_and_weight(
    model: StateSpaceModel,
    ps: ParticleSet,
    y_t: float,
    rng: np.random.Generator,
) -> Tuple[ParticleSet, PredictiveMixture]:
    """
    Move an unweighted set from t-1 to t and weight it by p(y_t | xbar_t).

    Returns:
        The weighted set at t and the predictive mixture of the propagated
        particles.

    Raises:
        FilterDivergenceError: if every likelihood is zero or non-finite
    """
    t = ps.t + 1
    propagated = model.transition_sample(ps.particles, t, rng)
    mixture = PredictiveMixture(components=propagated, model=model, t=t)
    weights = normalize_log_weights(np.asarray(model.log_likelihood(y_t, propagated, t), dtype=float), t)
    return ParticleSet(particles=propagated, weights=weights, t=t, normalized=True), mixture


def resample(ps: ParticleSet, M_target: int, rng: np.random.Generator) -> ParticleSet:
    """Multinomial resampling of M_target particles; the output is unweighted."""
    _check_count("M_target", M_target)
    idx = rng.choice(ps.M, size=M_target, replace=True, p=ps.weights)
    return ParticleSet.uniform(ps.particles[idx], t=ps.t)


def posterior_mean(ps: ParticleSet) -> np.ndarray:
    """Weighted mean sum_m w^(m) xbar^(m), shape (dx,)."""
    return ps.weights @ ps.particles


def sample_fictitious(pm: PredictiveMixture, K: int, rng: np.random.Generator) -> np.ndarray:
    """Draw K fictitious observations from the predictive mixture."""
    _check_count("K", K)
    idx = rng.integers(0, pm.M, size=K)
    return np.asarray(pm.model.observation_sample(pm.components[idx], pm.t, rng), dtype=float)
