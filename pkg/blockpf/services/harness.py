"""
Experiment harness.

Expands an ExperimentConfig into grid cells, runs independent replicates per
cell (fresh data and fresh filter, seeds derived from the base seed, the
cell index and the replicate index), aggregates per-replicate metrics and
writes the long-format CSV table plus a sidecar with the resolved config.
"""

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from blockpf import __version__
from blockpf.core.config import Settings, get_settings
from blockpf.core.exceptions import FilterDivergenceError
from blockpf.models.params import ExperimentConfig, ExperimentMode, ModelName
from blockpf.models.records import RunTrace
from blockpf.services import diagnostics, oracle
from blockpf.services.adapt import fixed_policy, run_adaptive_filter, two_phase_policy
from blockpf.services.simulation import simulate_data
from blockpf.services.state_space import create_model, describe_model

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("model", "M", "K", "W", "metric", "value", "stderr", "runs", "seed")
DIVERGED_METRIC = "diverged"
SIDECAR_SUFFIX = ".meta.txt"

MetricValues = Dict[str, Optional[float]]


@dataclass(frozen=True)
class GridCell:
    """
    One grid cell. M is the constant particle count (sweep), the initial
    count M0 (adaptive) or M1 (two_phase, with M2 set).
    """
    index: int
    M: int
    K: int
    W: int
    M2: Optional[int] = None

    @property
    def label(self) -> str:
        return f"{self.M}:{self.M2}" if self.M2 is not None else str(self.M)


@dataclass(frozen=True)
class ReplicateTask:
    config: ExperimentConfig
    cell: GridCell
    replicate: int
    seed: int


@dataclass(frozen=True)
class ResultRow:
    """One CSV row."""
    model: str
    M: str
    K: int
    W: int
    metric: str
    value: float
    stderr: float
    runs: int
    seed: int

    def as_csv(self) -> List[str]:
        return [
            self.model, self.M, str(self.K), str(self.W), self.metric,
            format_float(self.value), format_float(self.stderr), str(self.runs), str(self.seed),
        ]


def format_float(value: float) -> str:
    return f"{value:.12g}"


# Grid and seeds
def build_grid(config: ExperimentConfig) -> List[GridCell]:
    """Grid cells in the order their rows are written."""
    cells: List[GridCell] = []
    if config.mode == ExperimentMode.TWO_PHASE:
        W = max(1, config.T // 2)
        for M1, M2 in config.M_pairs:
            cells.append(GridCell(index=len(cells), M=M1, K=config.K_list[0], W=W, M2=M2))
        return cells

    counts = config.M_list if config.mode == ExperimentMode.SWEEP else config.M0_list
    for M in counts:
        for K in config.K_list:
            for W in config.W_list:
                cells.append(GridCell(index=len(cells), M=M, K=K, W=W))
    return cells


def metric_rows(metric: str, config: ExperimentConfig, cell: GridCell) -> List[str]:
    """
    Row names written for one requested metric in one cell.

    M_series gives M_series_<n> for every complete block n, pmf_a gives
    pmf_a_<k> for k = 0..K and pmf_b gives pmf_b_<j> over the b_bins bins;
    every other metric is a single row.
    """
    if metric == "M_series":
        return [f"M_series_{n}" for n in range(config.T // cell.W)]
    if metric == "pmf_a":
        return [f"pmf_a_{k}" for k in range(cell.K + 1)]
    if metric == "pmf_b":
        return [f"pmf_b_{j}" for j in range(config.b_bins)]
    return [metric]


def replicate_seeds(base: int, cell: int, runs: int) -> List[int]:
    """
    Deterministic 64-bit seeds for the replicates of one cell.

    Each seed hashes (base, cell, replicate) through numpy's SeedSequence.
    """
    return [
        int(np.random.SeedSequence([base, cell, r]).generate_state(1, dtype=np.uint64)[0])
        for r in range(runs)
    ]


# Per-run metrics
def _mean_or_none(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    return float(np.mean(values)) if values else None


def trace_metrics(
    trace: RunTrace,
    states: np.ndarray,
    K: int,
    metrics: Sequence[str],
    last_windows: int = 50,
    kalman_means: Optional[Sequence[float]] = None,
    b_bins: int = 20,
) -> MetricValues:
    """
    Per-run metrics of one filter trace.

    pvalue/pvalue_b/mean_M_last average over completed blocks; corr is the
    absolute lag-1 correlation of the whole A sequence; ab_gap is the mean
    of |B - A/K| over the steps. The series metrics fill one key per row
    name (see metric_rows). Metrics that cannot be computed are None or
    missing.
    """
    out: MetricValues = {}
    blocks = [block.record for block in trace.blocks]
    for metric in metrics:
        if metric == "pvalue":
            out[metric] = _mean_or_none(r.p_value for r in blocks if r.p_value is not None)
        elif metric == "pvalue_b":
            out[metric] = _mean_or_none(r.p_value_b for r in blocks if r.p_value_b is not None)
        elif metric == "corr":
            a_values = trace.a_values
            r = diagnostics.lag_correlation(a_values, 1) if len(a_values) > 2 else None
            out[metric] = abs(r) if r is not None else None
        elif metric == "ab_gap":
            out[metric] = _mean_or_none(
                abs(step.b - step.a / K) for step in trace.steps if step.b is not None
            )
        elif metric == "mse_state":
            estimates = np.array([step.posterior_mean[0] for step in trace.steps])
            out[metric] = float(np.mean((estimates - states[: len(estimates), 0]) ** 2))
        elif metric == "rmse_kalman":
            estimates = np.array([step.posterior_mean[0] for step in trace.steps])
            exact = np.asarray(kalman_means, dtype=float)[: len(estimates)]
            out[metric] = float(np.sqrt(np.mean((estimates - exact) ** 2)))
        elif metric == "mean_M":
            out[metric] = float(np.mean(trace.particle_counts))
        elif metric == "mean_M_last":
            tail = blocks[-min(last_windows, len(blocks)):] if blocks else []
            out[metric] = _mean_or_none(r.M_n for r in tail)
        elif metric == "M_series":
            for n, r in enumerate(blocks):
                out[f"M_series_{n}"] = float(r.M_n)
        elif metric == "pmf_a":
            for k, p in enumerate(diagnostics.empirical_pmf(trace.a_values, K)):
                out[f"pmf_a_{k}"] = float(p)
        elif metric == "pmf_b":
            b_values = [b for b in trace.b_values if b is not None]
            if b_values:
                for j, p in enumerate(diagnostics.b_histogram(b_values, b_bins)):
                    out[f"pmf_b_{j}"] = float(p)
    return out


# Replicates
def _run_filter_replicate(task: ReplicateTask) -> MetricValues:
    config, cell = task.config, task.cell
    model = create_model(config.model, config.model_params())
    data_ss, filter_ss, _ = np.random.SeedSequence(task.seed).spawn(3)
    states, observations = simulate_data(model, config.T, np.random.default_rng(data_ss))

    if config.mode == ExperimentMode.SWEEP:
        policy = fixed_policy(cell.K, cell.W, cell.M)
    else:
        policy = config.policy(cell.K, cell.W)

    metrics = config.resolved_metrics
    kalman_means = None
    if "rmse_kalman" in metrics:
        kalman_means = [ks.mean for ks in oracle.kalman_filter(config.model_params(), observations)]

    trace = run_adaptive_filter(
        model, observations, policy, cell.M, np.random.default_rng(filter_ss), seed=task.seed
    )
    return trace_metrics(
        trace, states, cell.K, metrics, config.last_windows, kalman_means, config.b_bins
    )


def _run_two_phase_replicate(task: ReplicateTask) -> MetricValues:
    config, cell = task.config, task.cell
    model = create_model(config.model, config.model_params())
    data_ss, filter_ss, ref_ss = np.random.SeedSequence(task.seed).spawn(3)
    _, observations = simulate_data(model, config.T, np.random.default_rng(data_ss))

    if config.model == ModelName.LGSS:
        reference = [ks.pred_obs_mean for ks in oracle.kalman_filter(config.model_params(), observations)]
    else:
        reference = oracle.reference_predictions(
            model, observations, config.reference_M, np.random.default_rng(ref_ss)
        )

    runs = (
        ("mse_m1", fixed_policy(cell.K, cell.W, cell.M), cell.M),
        ("mse_m2", fixed_policy(cell.K, cell.W, cell.M2), cell.M2),
        ("mse_switch", two_phase_policy(cell.K, config.T, cell.M, cell.M2), cell.M),
    )
    out: MetricValues = {}
    for (metric, policy, M0), ss in zip(runs, filter_ss.spawn(len(runs))):
        trace = run_adaptive_filter(model, observations, policy, M0, np.random.default_rng(ss), seed=task.seed)
        out[metric] = oracle.predictive_mse([step.pred_obs_mean for step in trace.steps], reference)
    return {metric: out[metric] for metric in config.resolved_metrics}


def run_replicate(task: ReplicateTask) -> MetricValues:
    """
    Run one replicate and return its metrics plus a divergence flag.

    A diverged replicate yields only {"diverged": 1.0}.
    """
    try:
        if task.config.mode == ExperimentMode.TWO_PHASE:
            values = _run_two_phase_replicate(task)
        else:
            values = _run_filter_replicate(task)
    except FilterDivergenceError as e:
        logger.warning(
            f"Replicate {task.replicate} of cell {task.cell.label} diverged at t={e.t}"
        )
        return {DIVERGED_METRIC: 1.0}
    values[DIVERGED_METRIC] = 0.0
    return values


# Aggregation
def aggregate(values: Sequence[Optional[float]]) -> Tuple[float, float, int]:
    """
    Mean, standard error (ddof=1 over sqrt(n), 0 for n=1) and count of
    the values that are not None; (nan, nan, 0) when none remain.
    """
    kept = np.array([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    n = len(kept)
    if n == 0:
        return float("nan"), float("nan"), 0
    stderr = float(np.std(kept, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(kept)), stderr, n


def _execute(tasks: List[ReplicateTask], settings: Settings) -> List[MetricValues]:
    # map keeps task order whatever the completion order
    if settings.parallel and len(tasks) > 1:
        workers = settings.WORKERS
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run_replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [run_replicate(task) for task in tasks]


def run_grid(config: ExperimentConfig, settings: Optional[Settings] = None) -> List[ResultRow]:
    """Run every cell of the grid and return the aggregated rows in order."""
    settings = settings or get_settings()
    cells = build_grid(config)
    tasks = [
        ReplicateTask(config=config, cell=cell, replicate=r, seed=seed)
        for cell in cells
        for r, seed in enumerate(replicate_seeds(config.seed, cell.index, config.runs))
    ]
    logger.info(
        f"Running '{config.name}': {len(cells)} cells x {config.runs} replicates "
        f"({settings.WORKERS} worker{'s' if settings.WORKERS > 1 else ''})"
    )
    results = _execute(tasks, settings)

    rows: List[ResultRow] = []
    model = config.model.value
    for cell in cells:
        cell_results = results[cell.index * config.runs:(cell.index + 1) * config.runs]
        for metric in config.resolved_metrics:
            for name in metric_rows(metric, config, cell):
                value, stderr, n = aggregate([res.get(name) for res in cell_results])
                rows.append(ResultRow(model, cell.label, cell.K, cell.W, name, value, stderr, n, config.seed))
        diverged = sum(res[DIVERGED_METRIC] for res in cell_results)
        rows.append(ResultRow(model, cell.label, cell.K, cell.W, DIVERGED_METRIC, diverged, 0.0, config.runs, config.seed))
        logger.info(f"Cell {cell.index} (M={cell.label}, K={cell.K}, W={cell.W}) done, {int(diverged)} diverged")
    return rows


# Output files
def resolve_output_path(
    config: ExperimentConfig,
    settings: Optional[Settings] = None,
    output_path: Optional[Union[str, Path]] = None,
) -> Path:
    """Explicit path, then the recipe's output_path, then OUTPUT_DIR/<name>.csv."""
    if output_path is not None:
        return Path(output_path)
    if config.output_path:
        return Path(config.output_path)
    settings = settings or get_settings()
    return settings.output_path / f"{config.name}.csv"


def sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + SIDECAR_SUFFIX)


def write_csv(rows: Sequence[ResultRow], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(row.as_csv() for row in rows)


def write_sidecar(config: ExperimentConfig, csv_path: Path) -> Path:
    """Record the tool version and the resolved config next to the CSV."""
    path = sidecar_path(csv_path)
    resolved = config.model_dump(mode="json")
    resolved["metrics"] = config.resolved_metrics
    resolved["model_description"] = describe_model(create_model(config.model, config.model_params()))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"blockpf {__version__}\n")
        f.write(json.dumps(resolved, sort_keys=True, indent=2))
        f.write("\n")
    return path


def run_table(
    config: ExperimentConfig,
    settings: Optional[Settings] = None,
    output_path: Optional[Union[str, Path]] = None,
) -> Path:
    """
    Run an experiment and write its CSV table and sidecar.

    Returns:
        Path of the written CSV

    Raises:
        OSError: if the output cannot be written
    """
    settings = settings or get_settings()
    path = resolve_output_path(config, settings, output_path)
    rows = run_grid(config, settings)
    try:
        write_csv(rows, path)
        write_sidecar(config, path)
    except OSError as e:
        logger.error(f"Failed to write results to {path}: {e}")
        raise
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def describe_grid(config: ExperimentConfig) -> Dict[str, object]:
    """Resolved grid and output shape of an experiment, for display."""
    cells = build_grid(config)
    metrics = config.resolved_metrics
    return {
        "name": config.name,
        "description": config.description,
        "model": config.model.value,
        "model_params": config.model_params().model_dump(),
        "mode": config.mode.value,
        "T": config.T,
        "runs": config.runs,
        "seed": config.seed,
        "metrics": metrics,
        "cells": [{"M": c.label, "K": c.K, "W": c.W} for c in cells],
        "rows": sum(
            1 + sum(len(metric_rows(m, config, cell)) for m in metrics) for cell in cells
        ),
    }
