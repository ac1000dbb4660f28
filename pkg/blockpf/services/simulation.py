"""
Synthetic data generation.
"""

from typing import Tuple

import numpy as np

from blockpf.core.exceptions import InvalidCountError
from blockpf.services.state_space import StateSpaceModel


def simulate_data(model: StateSpaceModel, T: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Simulate one trajectory x_1..x_T with observations y_1..y_T.

    Returns:
        states of shape (T, dx) and observations of shape (T,)
    """
    if T < 1:
        raise InvalidCountError(f"T must be >= 1, got {T}")

    states = np.empty((T, model.dx))
    observations = np.empty(T)
    x = model.prior_sample(rng)
    for t in range(1, T + 1):
        x = model.transition_sample(x, t, rng)
        states[t - 1] = x
        observations[t - 1] = float(model.observation_sample(x, t, rng))
    return states, observations
