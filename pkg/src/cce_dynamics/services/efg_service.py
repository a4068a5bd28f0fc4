"""
Extensive-form game trees and their sequence-form representation.

A single depth-first traversal numbers each player's sequences (empty
sequence first, then the actions of each infoset in the order the infoset is
first reached) and accumulates chance-weighted payoffs into the payoff
matrices indexed by sequence pairs.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import logging

import numpy as np
import scipy.sparse as sps

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.game_tree import (
    ChanceNode,
    DecisionNode,
    GameTree,
    Player,
    SequenceFormGame,
    TerminalNode,
)
from cce_dynamics.data_models.polytopes import Infoset, Treeplex
from cce_dynamics.errors import InvalidInputError, PerfectRecallError

logger = logging.getLogger(__name__)

EMPTY_SEQUENCE_LABEL = "<empty>"

Behavior = Mapping[str, np.ndarray]


class _SequenceBuilder:
    """Allocates one player's sequences as infosets are first reached."""

    def __init__(self) -> None:
        self.labels: List[str] = [EMPTY_SEQUENCE_LABEL]
        self.infosets: List[Infoset] = []
        self.infoset_ids: List[str] = []
        self._seen: Dict[str, Tuple[int, Tuple[str, ...], int]] = {}

    def register(self, node: DecisionNode, parent: int) -> int:
        """Return the first sequence index of `node`'s infoset, allocating it on first visit."""
        labels = node.action_labels
        known = self._seen.get(node.infoset_id)
        if known is not None:
            known_parent, known_labels, start = known
            if known_labels != labels:
                raise PerfectRecallError(node.infoset_id, "nodes disagree on the available actions")
            if known_parent != parent:
                raise PerfectRecallError(node.infoset_id, "nodes are reached through different own histories")
            return start
        start = len(self.labels)
        self.labels.extend(f"{node.infoset_id}/{label}" for label in labels)
        self.infosets.append(Infoset(parent=parent, start=start, stop=start + len(labels)))
        self.infoset_ids.append(node.infoset_id)
        self._seen[node.infoset_id] = (parent, labels, start)
        return start

    def treeplex(self) -> Treeplex:
        return Treeplex(num_sequences=len(self.labels), infosets=tuple(self.infosets))


def to_sequence_form(tree: GameTree) -> SequenceFormGame:
    """
    Convert a perfect-recall tree to a bimatrix game over treeplexes.

    A[sx, sy] sums chance probability times payoff_x over the leaves reached
    exactly by the sequence pair (sx, sy); B likewise with payoff_y.
    """
    builders = {Player.X: _SequenceBuilder(), Player.Y: _SequenceBuilder()}
    owner: Dict[str, Player] = {}
    payoff_x: Dict[Tuple[int, int], float] = defaultdict(float)
    payoff_y: Dict[Tuple[int, int], float] = defaultdict(float)

    def visit(node_id: int, seq_x: int, seq_y: int, prob: float) -> None:
        node = tree.nodes[node_id]
        if isinstance(node, TerminalNode):
            payoff_x[(seq_x, seq_y)] += prob * node.payoff_x
            payoff_y[(seq_x, seq_y)] += prob * node.payoff_y
        elif isinstance(node, ChanceNode):
            for p, _, child in node.outcomes:
                visit(child, seq_x, seq_y, prob * p)
        else:
            if owner.setdefault(node.infoset_id, node.player) != node.player:
                raise PerfectRecallError(node.infoset_id, "infoset is shared by both players")
            own = seq_x if node.player == Player.X else seq_y
            start = builders[node.player].register(node, own)
            for k, (_, child) in enumerate(node.actions):
                if node.player == Player.X:
                    visit(child, start + k, seq_y, prob)
                else:
                    visit(child, seq_x, start + k, prob)

    visit(tree.root, 0, 0, 1.0)

    tp_x = builders[Player.X].treeplex()
    tp_y = builders[Player.Y].treeplex()
    shape = (tp_x.num_sequences, tp_y.num_sequences)
    game = BimatrixGame(
        a_matrix=_assemble(payoff_x, shape),
        b_matrix=_assemble(payoff_y, shape),
        polytope_x=tp_x,
        polytope_y=tp_y,
        name=tree.name,
    )
    logger.info("Sequence form of %s: %d x %d sequences, %d x %d infosets",
                tree.name, shape[0], shape[1], len(tp_x.infosets), len(tp_y.infosets))
    return SequenceFormGame(
        game=game,
        seq_labels_x=builders[Player.X].labels,
        seq_labels_y=builders[Player.Y].labels,
        infoset_ids_x=builders[Player.X].infoset_ids,
        infoset_ids_y=builders[Player.Y].infoset_ids,
    )


def _assemble(entries: Dict[Tuple[int, int], float], shape: Tuple[int, int]) -> np.ndarray:
    if not entries:
        return np.zeros(shape)
    keys = list(entries)
    rows = [r for r, _ in keys]
    cols = [c for _, c in keys]
    return sps.coo_matrix(([entries[k] for k in keys], (rows, cols)), shape=shape).toarray()


def iter_leaves(tree: GameTree) -> Iterator[Tuple[Tuple[str, ...], float, TerminalNode]]:
    """Yield (action-label history from the root, chance probability, leaf) for every leaf."""
    stack: List[Tuple[int, Tuple[str, ...], float]] = [(tree.root, (), 1.0)]
    while stack:
        node_id, history, prob = stack.pop()
        node = tree.nodes[node_id]
        if isinstance(node, TerminalNode):
            yield history, prob, node
        elif isinstance(node, ChanceNode):
            for p, label, child in reversed(node.outcomes):
                stack.append((child, history + (label,), prob * p))
        else:
            for label, child in reversed(node.actions):
                stack.append((child, history + (label,), prob))


def _infoset_behavior(behavior: Behavior, node: DecisionNode) -> np.ndarray:
    probs = behavior.get(node.infoset_id)
    if probs is None:
        raise InvalidInputError(f"behavioral strategy has no entry for infoset '{node.infoset_id}'")
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (len(node.actions),):
        raise InvalidInputError(f"infoset '{node.infoset_id}' expects {len(node.actions)} probabilities")
    return probs


def expected_payoff(tree: GameTree, behavior_x: Behavior, behavior_y: Behavior) -> Tuple[float, float]:
    """Expected (payoff_x, payoff_y) under behavioral strategies, by direct tree expectation."""
    total_x = 0.0
    total_y = 0.0
    stack: List[Tuple[int, float]] = [(tree.root, 1.0)]
    while stack:
        node_id, reach = stack.pop()
        node = tree.nodes[node_id]
        if isinstance(node, TerminalNode):
            total_x += reach * node.payoff_x
            total_y += reach * node.payoff_y
        elif isinstance(node, ChanceNode):
            stack.extend((child, reach * p) for p, _, child in node.outcomes)
        else:
            behavior = behavior_x if node.player == Player.X else behavior_y
            probs = _infoset_behavior(behavior, node)
            stack.extend((child, reach * pr) for pr, (_, child) in zip(probs, node.actions))
    return total_x, total_y


def sample_playout(
    tree: GameTree, behavior_x: Behavior, behavior_y: Behavior, rng: np.random.Generator
) -> Tuple[float, float]:
    """Play the tree once, sampling chance and both behavioral strategies."""
    node = tree.nodes[tree.root]
    while not isinstance(node, TerminalNode):
        if isinstance(node, ChanceNode):
            probs = np.array([p for p, _, _ in node.outcomes])
            children = [c for _, _, c in node.outcomes]
        else:
            probs = _infoset_behavior(behavior_x if node.player == Player.X else behavior_y, node)
            children = [c for _, c in node.actions]
        node = tree.nodes[children[int(rng.choice(len(children), p=probs))]]
    return node.payoff_x, node.payoff_y


def _infosets_of(sfg: SequenceFormGame, player: Player) -> Tuple[Treeplex, List[str]]:
    if player == Player.X:
        return sfg.game.polytope_x, sfg.infoset_ids_x
    return sfg.game.polytope_y, sfg.infoset_ids_y


def behavioral_to_sequence(sfg: SequenceFormGame, player: Player, behavior: Behavior) -> np.ndarray:
    """Realization plan z with z[child] = z[parent] * behavior(infoset)(action)."""
    tp, ids = _infosets_of(sfg, player)
    z = np.zeros(tp.num_sequences)
    z[0] = 1.0
    for info, infoset_id in zip(tp.infosets, ids):
        probs = np.asarray(behavior[infoset_id], dtype=float)
        z[info.start:info.stop] = z[info.parent] * probs
    return z


def uniform_behavior(sfg: SequenceFormGame, player: Player) -> Dict[str, np.ndarray]:
    tp, ids = _infosets_of(sfg, player)
    return {infoset_id: np.full(info.size, 1.0 / info.size) for info, infoset_id in zip(tp.infosets, ids)}


def random_behavior(sfg: SequenceFormGame, player: Player, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    tp, ids = _infosets_of(sfg, player)
    return {infoset_id: rng.dirichlet(np.ones(info.size)) for info, infoset_id in zip(tp.infosets, ids)}


def dump_tree(tree: GameTree, max_nodes: Optional[int] = None) -> str:
    """Indented plain-text listing of the tree, depth first from the root."""
    lines: List[str] = [f"# {tree.name}: {len(tree.nodes)} nodes"]
    stack: List[Tuple[int, int, str]] = [(tree.root, 0, "")]
    while stack:
        if max_nodes is not None and len(lines) > max_nodes:
            lines.append("...")
            break
        node_id, depth, edge = stack.pop()
        node = tree.nodes[node_id]
        pad = "  " * depth
        prefix = f"{pad}{edge} -> " if edge else pad
        if isinstance(node, TerminalNode):
            lines.append(f"{prefix}[{node_id}] terminal ({node.payoff_x:g}, {node.payoff_y:g})")
        elif isinstance(node, ChanceNode):
            lines.append(f"{prefix}[{node_id}] chance")
            for p, label, child in reversed(node.outcomes):
                stack.append((child, depth + 1, f"{label} p={p:g}"))
        else:
            lines.append(f"{prefix}[{node_id}] {node.player.value} @ {node.infoset_id}")
            for label, child in reversed(node.actions):
                stack.append((child, depth + 1, label))
    return "\n".join(lines) + "\n"
