from __future__ import annotations

from typing import Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Simplex(BaseModel):
    """
    Probability simplex over `dim` pure actions.

    Points are length-`dim` vectors with nonnegative entries summing to one.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["simplex"] = "simplex"
    dim: int = Field(ge=1)

    @property
    def dimension(self) -> int:
        return self.dim


class Infoset(BaseModel):
    """
    One decision point of a treeplex.

    `parent` is the sequence leading to the decision; the actions available at
    the decision are the sequences `start, ..., stop - 1`.
    """

    model_config = ConfigDict(frozen=True)

    parent: int = Field(ge=0)
    start: int = Field(ge=1)
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


class Treeplex(BaseModel):
    """
    Sequence-form strategy polytope of one player in a perfect-recall game.

    Constraint system: z[0] = 1; for every infoset the child sequences sum to
    z[parent]; z >= 0. Sequence 0 is the empty sequence.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["treeplex"] = "treeplex"
    num_sequences: int = Field(ge=1)
    infosets: Tuple[Infoset, ...] = ()

    @property
    def dimension(self) -> int:
        return self.num_sequences

    @property
    def empty_sequence_index(self) -> int:
        return 0

    @model_validator(mode="after")
    def _check_structure(self) -> "Treeplex":
        # Ranges must tile 1..n-1 in order, parents must already exist.
        introduced = {0}
        expected_start = 1
        for k, info in enumerate(self.infosets):
            if info.stop <= info.start:
                raise ValueError(f"infoset {k} has an empty child range")
            if info.start != expected_start:
                raise ValueError(
                    f"infoset {k} starts at {info.start}, expected {expected_start} "
                    "(ranges must be disjoint, ordered and cover every sequence)"
                )
            if info.parent not in introduced:
                raise ValueError(
                    f"infoset {k} has parent {info.parent}, not introduced by an earlier infoset"
                )
            introduced.update(range(info.start, info.stop))
            expected_start = info.stop
        if expected_start != self.num_sequences:
            raise ValueError(
                f"infoset ranges cover sequences 1..{expected_start - 1}, "
                f"but num_sequences is {self.num_sequences}"
            )
        return self


StrategyPolytope = Union[Simplex, Treeplex]


class PolytopeConstants(BaseModel):
    """Geometric constants of a strategy set used by the inequality checkers."""

    norm_max: float = Field(ge=0.0)          # max Euclidean norm over the set
    diameter: float = Field(ge=0.0)          # max pairwise distance (upper bound for treeplexes)
    bregman_diameter: float = Field(ge=0.0)  # max D_R(x || x_hat_0), Euclidean regularizer


class Vertex(BaseModel):
    """A maximizing vertex of a linear function and its value."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: np.ndarray
    value: float
