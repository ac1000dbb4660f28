"""
Experiment recipe loader.

Recipes are flat key=value files (comments with #). Lists are comma
separated, two-phase pairs are written M1:M2 and model parameters are set
with model.<field> keys. BLOCKPF_RUNS and BLOCKPF_SEED in the environment
override the file; explicit overrides passed by the caller win over both.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from blockpf.core.exceptions import ConfigError
from blockpf.models.params import ExperimentConfig

logger = logging.getLogger(__name__)

MODEL_PREFIX = "model."
RECIPE_SUFFIX = ".cfg"
ENV_OVERRIDES = {"BLOCKPF_RUNS": "runs", "BLOCKPF_SEED": "seed"}


def parse_recipe(values: Dict[str, Optional[str]], source: str = "<recipe>") -> Dict[str, Any]:
    """Turn raw key=value pairs into ExperimentConfig keyword arguments."""
    allowed = set(ExperimentConfig.model_fields) - {"model_overrides"}
    data: Dict[str, Any] = {}
    model_overrides: Dict[str, float] = {}

    for key, raw in values.items():
        if raw is None:
            raise ConfigError(f"{source}: key '{key}' has no value")
        raw = raw.strip()
        if key.startswith(MODEL_PREFIX):
            field = key[len(MODEL_PREFIX):]
            try:
                model_overrides[field] = float(raw)
            except ValueError:
                raise ConfigError(f"{source}: {key} must be a number, got '{raw}'")
        elif key in allowed:
            data[key] = raw
        else:
            raise ConfigError(f"{source}: unknown key '{key}'")

    if model_overrides:
        data["model_overrides"] = model_overrides
    return data


def build_config(data: Dict[str, Any], source: str = "<recipe>") -> ExperimentConfig:
    """Validate recipe data, mapping pydantic errors to ConfigError."""
    try:
        return ExperimentConfig(**data)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"{source}: invalid experiment configuration: {e}") from e


def load_experiment(
    path: Union[str, Path],
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Load and validate an experiment recipe.

    Args:
        path: recipe file
        overrides: values that take precedence over the file and the
            environment (None entries are ignored)

    Returns:
        The validated ExperimentConfig

    Raises:
        FileNotFoundError: if the recipe does not exist
        ConfigError: if the recipe is malformed or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Experiment recipe not found: {path}")

    source = str(path)
    data = parse_recipe(dotenv_values(path, interpolate=False), source)
    data.setdefault("name", path.stem)

    for env_key, field in ENV_OVERRIDES.items():
        if os.environ.get(env_key):
            data[field] = os.environ[env_key]
    for field, value in (overrides or {}).items():
        if value is not None:
            data[field] = value

    config = build_config(data, source)
    logger.debug(f"Loaded experiment '{config.name}' from {source}")
    return config


def list_experiments(directory: Union[str, Path]) -> List[Tuple[str, str, Path]]:
    """
    Recipes found in a directory, sorted by file name.

    Returns:
        (name, description, path) for each loadable recipe; recipes that
        fail to load are logged and skipped.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Experiments directory not found: {directory}")

    found = []
    for path in sorted(directory.glob(f"*{RECIPE_SUFFIX}")):
        try:
            config = load_experiment(path)
        except ConfigError as e:
            logger.warning(f"Skipping {path}: {e}")
            continue
        found.append((config.name, config.description, path))
    return found
