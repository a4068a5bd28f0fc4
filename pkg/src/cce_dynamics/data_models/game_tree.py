from __future__ import annotations

from enum import Enum
from typing import Annotated, Dict, List, Literal, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cce_dynamics.data_models.game import BimatrixGame


class Player(str, Enum):
    X = "x"
    Y = "y"


class ChanceNode(BaseModel):
    """Nature move: `outcomes` is a list of (probability, label, child node id)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["chance"] = "chance"
    outcomes: Tuple[Tuple[float, str, int], ...]

    @model_validator(mode="after")
    def _check_distribution(self) -> "ChanceNode":
        if not self.outcomes:
            raise ValueError("chance node needs at least one outcome")
        probs = [p for p, _, _ in self.outcomes]
        if any(p < 0.0 for p in probs):
            raise ValueError("chance probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"chance probabilities sum to {sum(probs)!r}, expected 1")
        return self


class DecisionNode(BaseModel):
    """A move by `player` at information set `infoset_id`; actions are (label, child id)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["decision"] = "decision"
    player: Player
    infoset_id: str
    actions: Tuple[Tuple[str, int], ...]

    @model_validator(mode="after")
    def _check_actions(self) -> "DecisionNode":
        if not self.actions:
            raise ValueError(f"decision node at infoset '{self.infoset_id}' has no actions")
        return self

    @property
    def action_labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.actions)


class TerminalNode(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["terminal"] = "terminal"
    payoff_x: float
    payoff_y: float


Node = Union[ChanceNode, DecisionNode, TerminalNode]


class GameTree(BaseModel):
    """
    Finite extensive-form game stored as an arena of nodes.

    Children always have smaller ids than their parent (builders append nodes
    bottom-up), so the tree is acyclic by construction. Every node has at most
    one parent and the root has none.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    nodes: List[Annotated[Node, Field(discriminator="kind")]] = Field(default_factory=list)
    root: int

    @model_validator(mode="after")
    def _check_arena(self) -> "GameTree":
        if not 0 <= self.root < len(self.nodes):
            raise ValueError(f"root id {self.root} outside arena of {len(self.nodes)} nodes")
        parent_of: Dict[int, int] = {}
        for node_id, node in enumerate(self.nodes):
            if isinstance(node, ChanceNode):
                children = [c for _, _, c in node.outcomes]
            elif isinstance(node, DecisionNode):
                children = [c for _, c in node.actions]
            else:
                continue
            for child in children:
                if not 0 <= child < node_id:
                    raise ValueError(f"node {node_id} points to child {child}; children must precede parents")
                if child in parent_of:
                    raise ValueError(
                        f"node {child} is a child of both node {parent_of[child]} and node {node_id}; "
                        "subtrees cannot be shared"
                    )
                parent_of[child] = node_id
        if self.root in parent_of:
            raise ValueError(f"root {self.root} is a child of node {parent_of[self.root]}")
        return self


class SequenceFormGame(BaseModel):
    """
    A game tree converted to sequence form.

    `game` holds both treeplexes and payoff matrices indexed by sequence pairs.
    `infoset_ids_x[k]` names the k-th infoset of X's treeplex (same for Y).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    game: BimatrixGame
    seq_labels_x: List[str]
    seq_labels_y: List[str]
    infoset_ids_x: List[str]
    infoset_ids_y: List[str]

    def infoset_index(self, player: Player) -> Dict[str, int]:
        ids = self.infoset_ids_x if player == Player.X else self.infoset_ids_y
        return {infoset_id: k for k, infoset_id in enumerate(ids)}
