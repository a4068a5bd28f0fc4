"""Trace export service.

Turns a recorded run into the per-iteration metrics table written by the CLI,
and persists raw iterates to `.npz` so metrics can be recomputed from disk.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated
import logging

import numpy as np
import pandas as pd
from pydantic import Field, TypeAdapter

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.polytopes import StrategyPolytope
from cce_dynamics.data_models.run import RunConfig, Trace
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.metrics_service import (
    average_strategy_nash_gap,
    nash_gap_series,
    path_lengths,
    regret,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "t",
    "reg_x",
    "reg_y",
    "nash_gap",
    "cce_gap",
    "sigma_x",
    "sigma_y",
    "step_norm_x",
    "step_norm_y",
    "avg_nash_gap",
]
CSV_FLOAT_FORMAT = "%.12g"

_ARRAY_FIELDS = (
    "x", "y", "u_x", "u_y", "prox_x", "prox_y", "gap_x", "gap_y",
    "sec_step_x", "sec_step_y", "step_x", "step_y",
)
_POLYTOPE = TypeAdapter(Annotated[StrategyPolytope, Field(discriminator="kind")])


def trace_frame(trace: Trace, game: BimatrixGame) -> pd.DataFrame:
    """One row per iteration t = 1..T with the columns in TRACE_COLUMNS."""
    horizon = trace.horizon
    t = np.arange(1, horizon + 1)
    reg_x = regret(trace, "x").values
    reg_y = regret(trace, "y").values
    paths = path_lengths(trace)
    frame = pd.DataFrame(
        {
            "t": t,
            "reg_x": reg_x,
            "reg_y": reg_y,
            "nash_gap": nash_gap_series(trace, game)[1:],
            "cce_gap": np.maximum(reg_x, reg_y) / t,
            "sigma_x": paths.sigma_x[1:],
            "sigma_y": paths.sigma_y[1:],
            "step_norm_x": trace.step_x[1:],
            "step_norm_y": trace.step_y[1:],
            "avg_nash_gap": average_strategy_nash_gap(trace, game),
        }
    )
    return frame[TRACE_COLUMNS]


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a table with a fixed float format so identical data gives identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def read_trace_csv(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace CSV not found: {path}")
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError as exc:
        raise InvalidInputError(f"trace CSV {path} is empty") from exc
    if frame.empty:
        raise InvalidInputError(f"trace CSV {path} has no rows")
    return frame


def save_trace(trace: Trace, path: Path) -> Path:
    """Persist iterates, utilities and step distances with JSON metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {
        "game_name": trace.game_name,
        "config": trace.config.model_dump(mode="json"),
        "polytope_x": trace.polytope_x.model_dump(mode="json"),
        "polytope_y": trace.polytope_y.model_dump(mode="json"),
    }
    arrays = {name: getattr(trace, name) for name in _ARRAY_FIELDS}
    if trace.has_secondary:
        arrays["x_hat"], arrays["y_hat"] = trace.x_hat, trace.y_hat
    with path.open("wb") as handle:
        np.savez_compressed(handle, metadata=np.array(json.dumps(metadata, sort_keys=True)), **arrays)
    logger.info("Saved trace of %s (T=%d) to %s", trace.game_name, trace.horizon, path)
    return path


def load_trace(path: Path) -> Trace:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace file not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        if "metadata" not in data.files:
            raise InvalidInputError(f"{path} is not a saved trace (no metadata)")
        metadata = json.loads(str(data["metadata"]))
        arrays = {name: data[name] for name in data.files if name != "metadata"}
    return Trace(
        game_name=metadata["game_name"],
        config=RunConfig.model_validate(metadata["config"]),
        polytope_x=_POLYTOPE.validate_python(metadata["polytope_x"]),
        polytope_y=_POLYTOPE.validate_python(metadata["polytope_y"]),
        **arrays,
    )
