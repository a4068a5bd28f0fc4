"""
Name-based lookup of the games the CLI can run.

Accepted names: the built-in example and its zero-sum counterpart, the
extensive-form benchmarks (converted to sequence form), `random:n,m,seed`,
and paths to matrix-game files.
"""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional
import logging

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.game_tree import SequenceFormGame
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.efg_benchmarks import BENCHMARK_BUILDERS
from cce_dynamics.services.efg_service import to_sequence_form
from cce_dynamics.services.game_service import (
    example_game,
    load_game_file,
    random_game,
    zero_sum_counterpart,
)

logger = logging.getLogger(__name__)

EXAMPLE_NAMES = ("example-3x3", "example-3x3-zerosum")
RANDOM_PREFIX = "random:"

# Initializations used when a run does not ask for one.
DEFAULT_INIT: Dict[str, str] = {"battleship": "vertex:1,1"}


@lru_cache(maxsize=None)
def benchmark_sequence_form(name: str) -> SequenceFormGame:
    if name not in BENCHMARK_BUILDERS:
        raise InvalidInputError(f"unknown benchmark '{name}' (choose from {', '.join(BENCHMARK_BUILDERS)})")
    return to_sequence_form(BENCHMARK_BUILDERS[name]())


def resolve_game(
    name: str, treeplex_x: Optional[Path] = None, treeplex_y: Optional[Path] = None
) -> BimatrixGame:
    """Game for a CLI name; treeplex files only apply to matrix-game files."""
    if name == "example-3x3":
        return example_game()
    if name == "example-3x3-zerosum":
        return zero_sum_counterpart(example_game())
    if name in BENCHMARK_BUILDERS:
        return benchmark_sequence_form(name).game
    if name.startswith(RANDOM_PREFIX):
        parts = name[len(RANDOM_PREFIX):].split(",")
        try:
            n, m, seed = (int(p) for p in parts)
        except ValueError as exc:
            raise InvalidInputError(f"random game expects 'random:n,m,seed', got '{name}'") from exc
        return random_game(n, m, seed)
    path = Path(name)
    if path.exists():
        return load_game_file(path, treeplex_x, treeplex_y)
    raise InvalidInputError(f"unknown game '{name}' (see `games list`)")


def default_init(name: str) -> str:
    return DEFAULT_INIT.get(name, "uniform")


def list_games() -> List[str]:
    return list(EXAMPLE_NAMES) + list(BENCHMARK_BUILDERS) + [f"{RANDOM_PREFIX}n,m,seed", "<path to matrix file>"]
