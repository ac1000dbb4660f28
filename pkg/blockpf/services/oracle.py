"""
Reference computations for validating the particle filter.

Exact Kalman filtering for the linear-Gaussian model, exact predictive-CDF
values, the exact-sampler distribution of the rank statistic, and a high-M
particle surrogate for models without a closed-form filter.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import special

from blockpf.core.exceptions import InvalidCountError
from blockpf.models.params import LgssParams
from blockpf.services import bpf
from blockpf.services.adapt import fixed_policy, run_adaptive_filter, two_phase_policy
from blockpf.services.simulation import simulate_data
from blockpf.services.state_space import LinearGaussianModel, StateSpaceModel

logger = logging.getLogger(__name__)


# Kalman filter
@dataclass(frozen=True)
class KalmanState:
    """Posterior N(mean, var) of x_t and the predictive N(pred_obs_mean, pred_obs_var) of y_t."""
    mean: float
    var: float
    pred_obs_mean: float = float("nan")
    pred_obs_var: float = float("nan")


def kalman_initial(params: LgssParams) -> KalmanState:
    """The prior p(x_0) as a KalmanState."""
    return KalmanState(mean=params.prior_mean, var=params.prior_std ** 2)


def kalman_step(params: LgssParams, ks: KalmanState, y: float) -> KalmanState:
    """One predict-update step of the scalar Kalman filter."""
    pred_mean = params.a * ks.mean
    pred_var = params.a ** 2 * ks.var + params.sigma_u ** 2
    obs_var = pred_var + params.sigma_v ** 2
    gain = pred_var / obs_var
    return KalmanState(
        mean=pred_mean + gain * (y - pred_mean),
        var=pred_var * params.sigma_v ** 2 / obs_var,
        pred_obs_mean=pred_mean,
        pred_obs_var=obs_var,
    )


def kalman_filter(params: LgssParams, observations: Sequence[float]) -> List[KalmanState]:
    """Run the Kalman filter over y_1..y_T; entry t-1 holds the state after y_t."""
    ks = kalman_initial(params)
    states = []
    for y in observations:
        ks = kalman_step(params, ks, float(y))
        states.append(ks)
    return states


def exact_b(ks: KalmanState, y: float) -> float:
    """Exact predictive CDF of y under the Kalman predictive."""
    return float(special.ndtr((y - ks.pred_obs_mean) / np.sqrt(ks.pred_obs_var)))


# Exact sampler
def exact_sampler_sequence(K: int, T: int, rng: np.random.Generator) -> np.ndarray:
    """
    A statistics when the actual and the K fictitious observations share
    the same continuous distribution (standard normal), for T steps.
    """
    if K < 1 or T < 1:
        raise InvalidCountError(f"K and T must be >= 1, got K={K}, T={T}")
    y = rng.standard_normal(T)
    fictitious = rng.standard_normal((T, K))
    return np.count_nonzero(fictitious < y[:, None], axis=1)


def exact_sampler_pmf(K: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical pmf over {0, ..., K} of the exact-sampler A statistic."""
    a_values = exact_sampler_sequence(K, draws, rng)
    return np.bincount(a_values, minlength=K + 1) / draws


# Predictive MSE
def last_quarter(T: int) -> slice:
    """Index range of the last quarter of T steps (at least one step)."""
    return slice(T - max(1, T // 4), T)


def predictive_mse(predicted: Sequence[float], reference: Sequence[float]) -> float:
    """Mean squared difference over the last quarter of the steps."""
    predicted = np.asarray(predicted, dtype=float)
    reference = np.asarray(reference, dtype=float)
    window = last_quarter(len(predicted))
    return float(np.mean((predicted[window] - reference[window]) ** 2))


def reference_predictions(
    model: StateSpaceModel,
    observations: Sequence[float],
    M: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Predictive observation means of a plain constant-M bootstrap filter,
    used as surrogate ground truth when no exact filter exists.
    """
    ps = bpf.initialize(model, M, rng)
    means = np.empty(len(observations))
    for i, y in enumerate(observations):
        weighted, mixture = bpf.propagate_and_weight(model, ps, float(y), rng)
        means[i] = mixture.mean()
        ps = bpf.resample(weighted, M, rng)
    return means


def pf_vs_kalman_mse(
    params: LgssParams,
    M: int,
    T: int,
    runs: int,
    rng: np.random.Generator,
    M2: Optional[int] = None,
) -> float:
    """
    Mean over runs of the last-quarter squared error between the particle
    and the Kalman predictive observation means.

    With M2 the filter uses M particles for the first T//2 steps and M2
    afterwards.
    """
    if runs < 1:
        raise InvalidCountError(f"runs must be >= 1, got {runs}")
    model = LinearGaussianModel(params)
    policy = fixed_policy(1, T, M) if M2 is None else two_phase_policy(1, T, M, M2)

    errors = []
    for run in range(runs):
        _, observations = simulate_data(model, T, rng)
        kalman = kalman_filter(params, observations)
        trace = run_adaptive_filter(model, observations, policy, M, rng)
        errors.append(predictive_mse(
            [step.pred_obs_mean for step in trace.steps],
            [ks.pred_obs_mean for ks in kalman],
        ))
        logger.debug(f"pf_vs_kalman_mse run {run}: {errors[-1]:.6g}")
    return float(np.mean(errors))
