from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from cce_dynamics.data_models.run import InitMode

CHECKER_NAMES = ("rvu", "stability", "balanced", "dichotomy")


class ExperimentConfig(BaseModel):
    """
    Settings of one CLI experiment, read from a flat key=value file.

    Unknown keys are rejected. `eta` is a positive float or the string "auto"
    (1 / (2 * max spectral norm)).
    """

    model_config = ConfigDict(extra="forbid")

    game: str = "example-3x3"
    eta: Union[float, str] = 0.1
    horizon: int = Field(default=1000, ge=1)
    init: Optional[str] = None  # None: the game's default (uniform, or fixed vertices for battleship)
    seeds: List[int] = Field(default_factory=list)
    out: Path = Path("out/trace.csv")
    iterates_out: Optional[Path] = None
    checks: List[str] = Field(default_factory=list)
    normalize: bool = False
    record_secondary: bool = False
    projection_tol: Optional[float] = Field(default=None, gt=0.0)
    treeplex_x: Optional[Path] = None
    treeplex_y: Optional[Path] = None

    @field_validator("eta", mode="before")
    @classmethod
    def _parse_eta(cls, value):
        if isinstance(value, str):
            if value.strip().lower() == "auto":
                return "auto"
            value = float(value)
        if value <= 0:
            raise ValueError(f"eta must be positive or 'auto', got {value}")
        return float(value)

    @field_validator("init")
    @classmethod
    def _check_init(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            InitMode.parse(value)
        return value

    @field_validator("seeds", "checks", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("checks")
    @classmethod
    def _known_checks(cls, value: List[str]) -> List[str]:
        for name in value:
            if name not in CHECKER_NAMES:
                raise ValueError(f"unknown checker '{name}' (choose from {', '.join(CHECKER_NAMES)})")
        return value
