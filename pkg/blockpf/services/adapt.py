"""
Block-adaptive bootstrap particle filter.

Runs the filter step by step, collecting A and B statistics, and at the end
of each block assesses them, updates the particle count and resamples the
current weighted set to the new size.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from blockpf.core.exceptions import FilterDivergenceError, UnsupportedModelError
from blockpf.models.params import AdaptMethod, AdaptPolicy
from blockpf.models.records import (
    AdaptAction,
    AdaptDecision,
    BlockOutcome,
    RunTrace,
    StepRecord,
    WindowRecord,
)
from blockpf.services import bpf, diagnostics
from blockpf.services.state_space import StateSpaceModel

logger = logging.getLogger(__name__)


# Block assessment
def _threshold_decision(p: Optional[float], policy: AdaptPolicy) -> AdaptDecision:
    if p is None:
        return AdaptDecision(action=AdaptAction.KEEP)
    if p < policy.p_low:
        action = AdaptAction.INCREASE
    elif p > policy.p_high:
        action = AdaptAction.DECREASE
    else:
        action = AdaptAction.KEEP
    return AdaptDecision(action=action, evidence=p)


def assess_block(rec: WindowRecord, policy: AdaptPolicy) -> AdaptDecision:
    """Turn the statistics of a completed block into an increase/keep/decrease decision."""
    method = policy.method

    if method == AdaptMethod.UNIFORMITY_A:
        return _threshold_decision(diagnostics.chi2_uniformity_pvalue(rec.a_values, rec.K), policy)

    if method == AdaptMethod.CORRELATION_A:
        r = diagnostics.lag_correlation(rec.a_values, 1) if rec.W_n > 2 else None
        if r is None:
            return AdaptDecision(action=AdaptAction.KEEP)
        if abs(r) > policy.r_high:
            action = AdaptAction.INCREASE
        elif abs(r) < policy.r_low:
            action = AdaptAction.DECREASE
        else:
            action = AdaptAction.KEEP
        return AdaptDecision(action=action, evidence=r)

    if method == AdaptMethod.UNIFORMITY_B:
        if not rec.b_values:
            return AdaptDecision(action=AdaptAction.KEEP)
        return _threshold_decision(diagnostics.b_uniformity_pvalue(rec.b_values, rec.K + 1), policy)

    if method == AdaptMethod.MOMENTS_B:
        if not rec.b_values:
            return AdaptDecision(action=AdaptAction.KEEP)
        n_moments = min(policy.n_moments, rec.K)
        return _threshold_decision(diagnostics.moment_pvalue(rec.b_values, n_moments), policy)

    if method == AdaptMethod.SCHEDULED:
        schedule = policy.m_schedule
        target = schedule[min(rec.n + 1, len(schedule) - 1)]
        if target > rec.M_n:
            action = AdaptAction.INCREASE
        elif target < rec.M_n:
            action = AdaptAction.DECREASE
        else:
            action = AdaptAction.KEEP
        return AdaptDecision(action=action, target=target)

    return AdaptDecision(action=AdaptAction.KEEP)


def update_M(M_n: int, d: AdaptDecision, policy: AdaptPolicy) -> int:
    """Geometric particle-count update, clamped to [M_min, M_max]."""
    if d.target is not None:
        return policy.clamp(d.target)
    if d.action == AdaptAction.INCREASE:
        return policy.clamp(int(np.floor(M_n * policy.scale + 0.5)))
    if d.action == AdaptAction.DECREASE:
        return policy.clamp(int(np.floor(M_n / policy.scale + 0.5)))
    return M_n


# Policies for constant and scheduled M
def fixed_policy(K: int, W: int, M: int) -> AdaptPolicy:
    """Constant-M policy; any positive M is admissible."""
    return AdaptPolicy(K=K, W=W, M_min=1, M_max=max(M, 2), method=AdaptMethod.FIXED)


def two_phase_policy(K: int, T: int, M1: int, M2: int) -> AdaptPolicy:
    """M1 particles for the first T//2 steps, M2 afterwards."""
    return AdaptPolicy(
        K=K,
        W=max(1, T // 2),
        M_min=1,
        M_max=max(M1, M2, 2),
        method=AdaptMethod.SCHEDULED,
        m_schedule=[M1, M2],
    )


# Adaptive loop
def _window_record(
    n: int, M_n: int, K: int, a_values: List[int], b_values: List[float]
) -> WindowRecord:
    W_n = len(a_values)
    p_value_b = diagnostics.b_uniformity_pvalue(b_values, K + 1) if b_values else None
    return WindowRecord(
        n=n,
        W_n=W_n,
        M_n=M_n,
        K=K,
        a_values=a_values,
        b_values=b_values,
        p_value=diagnostics.chi2_uniformity_pvalue(a_values, K),
        p_value_b=p_value_b,
        corr=diagnostics.lag_correlation(a_values, 1) if W_n > 2 else None,
    )


def run_adaptive_filter(
    model: StateSpaceModel,
    observations: Sequence[float],
    policy: AdaptPolicy,
    M0: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> RunTrace:
    """
    Run the block-adaptive bootstrap filter over a sequence of observations.

    Args:
        model: the state-space model
        observations: y_1..y_T
        policy: block assessment and particle-count policy
        M0: initial number of particles
        rng: the run's random generator
        seed: recorded in the trace

    Returns:
        RunTrace with one StepRecord per observation and one BlockOutcome
        per completed block (a trailing partial block is not assessed).

    Raises:
        FilterDivergenceError: carrying the trace up to the failure
        UnsupportedModelError: if the policy assesses B statistics and the
            model has no observation CDF
    """
    if len(observations) == 0:
        raise ValueError("observations must not be empty")
    if policy.uses_b and not model.supports_cdf:
        raise UnsupportedModelError(f"{policy.method.value} needs an observation CDF, which {model.name} lacks")

    trace = RunTrace(seed=seed)
    K = policy.K
    track_b = model.supports_cdf
    M_n = policy.clamp(M0) if policy.method != AdaptMethod.FIXED else M0
    ps = bpf.initialize(model, M_n, rng)

    n = 0
    W_n = policy.window_length(n)
    a_block: List[int] = []
    b_block: List[float] = []

    for y_t in observations:
        y_t = float(y_t)
        try:
            weighted, mixture = bpf.propagate_and_weight(model, ps, y_t, rng)
        except FilterDivergenceError as e:
            logger.warning(f"Filter diverged at t={e.t} with M={M_n}")
            raise FilterDivergenceError(str(e), t=e.t, trace=trace) from e

        fictitious = bpf.sample_fictitious(mixture, K, rng)
        a = diagnostics.a_statistic(y_t, fictitious)
        b = diagnostics.b_statistic(model, mixture, y_t) if track_b else None
        a_block.append(a)
        if b is not None:
            b_block.append(b)

        trace.steps.append(StepRecord(
            t=weighted.t,
            M=M_n,
            posterior_mean=bpf.posterior_mean(weighted).tolist(),
            pred_obs_mean=mixture.mean(),
            a=a,
            b=b,
        ))

        # block end: assess, pick the next M, resample to it below
        if len(a_block) == W_n:
            record = _window_record(n, M_n, K, a_block, b_block)
            decision = assess_block(record, policy)
            M_next = update_M(M_n, decision, policy)
            trace.blocks.append(BlockOutcome(record=record, decision=decision, next_M=M_next))
            logger.debug(
                f"Block {n} ended at t={weighted.t}: M={M_n} -> {M_next} "
                f"({decision.action.value}, evidence={decision.evidence})"
            )
            M_n = M_next
            n += 1
            W_n = policy.window_length(n)
            a_block, b_block = [], []

        ps = bpf.resample(weighted, M_n, rng)

    return trace
