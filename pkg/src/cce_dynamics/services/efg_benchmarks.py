"""
Builders for the four extensive-form benchmark games.

Player X moves first in every game (Liar's Dice first bidder, Sheriff
smuggler, Battleship first shooter, Goofspiel first bidder). The rules
evaluators at the bottom of this module recompute leaf payoffs from an action
history alone and are kept independent of the builders.
"""
from __future__ import annotations

from itertools import permutations
from typing import List, Sequence, Tuple

import logging

from cce_dynamics.data_models.game_tree import ChanceNode, DecisionNode, GameTree, Node, Player, TerminalNode

logger = logging.getLogger(__name__)


# Liar's Dice: one 4-face die each, bids (count, face) with count <= 2
DICE_FACES = 4
MAX_BID_COUNT = 2

# Sheriff
MAX_ILLEGAL_ITEMS = 5
MAX_BRIBE = 3
BARGAINING_ROUNDS = 2
CLEAN_INSPECTION_PAYOFF = 3.0
CAUGHT_PENALTY_PER_ITEM = 2.0

# Battleship: 2x2 grid, one ship of size 1 per player
GRID_CELLS = 4
SHIP_VALUE = 4.0
LOSS_MULTIPLIER = 2.0
FIRING_ROUNDS = 2

# Goofspiel
HAND_SIZE = 3

Payoffs = Tuple[float, float]


class _TreeBuilder:
    """Appends nodes bottom-up; every node's children already exist when it is added."""

    def __init__(self) -> None:
        self.nodes: List[Node] = []

    def _add(self, node: Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def terminal(self, payoffs: Payoffs) -> int:
        return self._add(TerminalNode(payoff_x=payoffs[0], payoff_y=payoffs[1]))

    def chance(self, outcomes: Sequence[Tuple[float, str, int]]) -> int:
        return self._add(ChanceNode(outcomes=tuple(outcomes)))

    def decision(self, player: Player, infoset_id: str, actions: Sequence[Tuple[str, int]]) -> int:
        return self._add(DecisionNode(player=player, infoset_id=infoset_id, actions=tuple(actions)))

    def finish(self, name: str, root: int) -> GameTree:
        tree = GameTree(name=name, nodes=self.nodes, root=root)
        logger.info("Built %s with %d nodes", name, len(self.nodes))
        return tree


def _mover(turn: int) -> Player:
    return Player.X if turn % 2 == 0 else Player.Y


# --------------------------------------------------------------------------
# Liar's Dice
# --------------------------------------------------------------------------

def bid_of_rank(rank: int) -> Tuple[int, int]:
    """(count, face) of a bid; face takes precedence over count in the order."""
    return rank % MAX_BID_COUNT + 1, rank // MAX_BID_COUNT + 1


def _bid_label(rank: int) -> str:
    count, face = bid_of_rank(rank)
    return f"bid:{count}x{face}"


def build_liars_dice() -> GameTree:
    """
    Each player privately rolls one 4-face die; X opens with a bid, then the
    players alternate raising the bid or calling "liar" on the previous one.
    """
    b = _TreeBuilder()
    num_bids = DICE_FACES * MAX_BID_COUNT

    def bidding(dice: Tuple[int, int], ranks: Tuple[int, ...]) -> int:
        player = _mover(len(ranks))
        own_die = dice[0] if player == Player.X else dice[1]
        history = ",".join(_bid_label(r)[4:] for r in ranks)
        infoset_id = f"{player.value}:die={own_die}|{history}"
        last = ranks[-1] if ranks else -1
        actions = [(_bid_label(r), bidding(dice, ranks + (r,))) for r in range(last + 1, num_bids)]
        if ranks:
            count, face = bid_of_rank(ranks[-1])
            claim_holds = sum(1 for d in dice if d == face) >= count
            winner = _mover(len(ranks) - 1) if claim_holds else player
            actions.append(("liar", b.terminal((1.0, -1.0) if winner == Player.X else (-1.0, 1.0))))
        return b.decision(player, infoset_id, actions)

    rolls = [(d1, d2) for d1 in range(1, DICE_FACES + 1) for d2 in range(1, DICE_FACES + 1)]
    prob = 1.0 / len(rolls)
    outcomes = [(prob, f"roll:{d1},{d2}", bidding((d1, d2), ())) for d1, d2 in rolls]
    return b.finish("liars-dice", b.chance(outcomes))


# --------------------------------------------------------------------------
# Sheriff
# --------------------------------------------------------------------------

def build_sheriff() -> GameTree:
    """
    X is the smuggler, Y the sheriff. The smuggler loads n illegal items, then
    each bargaining round is a bribe followed by accept/inspect. Only the last
    round's answer is binding; the smuggler sees earlier answers, the sheriff
    never sees n.
    """
    b = _TreeBuilder()

    def bargaining(n: int, past: Tuple[Tuple[int, str], ...]) -> int:
        history = ",".join(f"{bribe}:{answer}" for bribe, answer in past)
        bribe_actions = []
        for bribe in range(MAX_BRIBE + 1):
            answers = []
            for answer in ("accept", "inspect"):
                rounds = past + ((bribe, answer),)
                if len(rounds) == BARGAINING_ROUNDS and answer == "accept":
                    child = b.terminal((float(n - bribe), float(bribe)))
                elif len(rounds) == BARGAINING_ROUNDS:
                    penalty = CLEAN_INSPECTION_PAYOFF if n == 0 else -CAUGHT_PENALTY_PER_ITEM * n
                    child = b.terminal((penalty, -penalty))
                else:
                    child = bargaining(n, rounds)
                answers.append((answer, child))
            sheriff_infoset = f"y:round={len(past) + 1}|{history}|bribe={bribe}"
            bribe_actions.append((f"bribe={bribe}", b.decision(Player.Y, sheriff_infoset, answers)))
        return b.decision(Player.X, f"x:n={n}|{history}", bribe_actions)

    load_actions = [(f"load={n}", bargaining(n, ())) for n in range(MAX_ILLEGAL_ITEMS + 1)]
    root = b.decision(Player.X, "x:load", load_actions)
    return b.finish("sheriff", root)


# --------------------------------------------------------------------------
# Battleship
# --------------------------------------------------------------------------

def build_battleship() -> GameTree:
    """
    Both players secretly place a size-1 ship on a 2x2 grid (X first), then
    fire alternately, X first, up to two shots each. Every shot's result is
    public; the game ends as soon as a ship is sunk.
    """
    b = _TreeBuilder()
    max_shots = 2 * FIRING_ROUNDS

    def firing(ships: Tuple[int, int], shots: Tuple[Tuple[Player, int], ...]) -> int:
        if len(shots) == max_shots:
            return b.terminal((0.0, 0.0))
        player = _mover(len(shots))
        own_ship = ships[0] if player == Player.X else ships[1]
        target_ship = ships[1] if player == Player.X else ships[0]
        fired = {c for p, c in shots if p == player}
        history = ",".join(f"{p.value}{c}" for p, c in shots)
        actions = []
        for cell in range(GRID_CELLS):
            if cell in fired:
                continue
            after = shots + ((player, cell),)
            if cell == target_ship:
                sunk = (SHIP_VALUE, -LOSS_MULTIPLIER * SHIP_VALUE)
                child = b.terminal(sunk if player == Player.X else sunk[::-1])
            else:
                child = firing(ships, after)
            actions.append((f"fire={cell}", child))
        return b.decision(player, f"{player.value}:ship={own_ship}|{history}", actions)

    def placement_y(ship_x: int) -> int:
        actions = [(f"place={cell}", firing((ship_x, cell), ())) for cell in range(GRID_CELLS)]
        return b.decision(Player.Y, "y:place", actions)

    root = b.decision(Player.X, "x:place", [(f"place={cell}", placement_y(cell)) for cell in range(GRID_CELLS)])
    return b.finish("battleship", root)


# --------------------------------------------------------------------------
# Goofspiel
# --------------------------------------------------------------------------

def build_goofspiel(shuffled: bool = False) -> GameTree:
    """
    Three-card Goofspiel with limited information: each player only ever sees
    its own past bids (and, when shuffled, the prizes revealed so far).

    The prize stack is 1, 2, 3 by default (a single-outcome chance node);
    `shuffled=True` draws it uniformly from all orderings instead.
    """
    b = _TreeBuilder()
    cards = tuple(range(1, HAND_SIZE + 1))

    def score(won: Tuple[float, float], prize: int, card_x: int, card_y: int) -> Tuple[float, float]:
        if card_x > card_y:
            return won[0] + prize, won[1]
        if card_y > card_x:
            return won[0], won[1] + prize
        return won

    def turn(
        prizes: Tuple[int, ...], bids_x: Tuple[int, ...], bids_y: Tuple[int, ...], won: Tuple[float, float]
    ) -> int:
        k = len(bids_x)
        if k == HAND_SIZE:
            return b.terminal(won)
        seen = f"|prizes={''.join(map(str, prizes[:k + 1]))}" if shuffled else ""
        # X bids first; Y's infoset does not depend on X's pending card.
        x_actions = []
        for card_x in cards:
            if card_x in bids_x:
                continue
            y_actions = []
            for card_y in cards:
                if card_y in bids_y:
                    continue
                after = score(won, prizes[k], card_x, card_y)
                y_actions.append((f"play={card_y}", turn(prizes, bids_x + (card_x,), bids_y + (card_y,), after)))
            y_infoset = f"y:turn={k + 1}|bids={''.join(map(str, bids_y))}{seen}"
            x_actions.append((f"play={card_x}", b.decision(Player.Y, y_infoset, y_actions)))
        x_infoset = f"x:turn={k + 1}|bids={''.join(map(str, bids_x))}{seen}"
        return b.decision(Player.X, x_infoset, x_actions)

    orders = list(permutations(cards)) if shuffled else [cards]
    prob = 1.0 / len(orders)
    outcomes = [(prob, "prizes:" + ",".join(map(str, order)), turn(order, (), (), (0.0, 0.0))) for order in orders]
    name = "goofspiel-shuffled" if shuffled else "goofspiel"
    return b.finish(name, b.chance(outcomes))


# --------------------------------------------------------------------------
# Rules evaluators (history in, payoffs out)
# --------------------------------------------------------------------------

def liars_dice_payoff(dice: Sequence[int], bids: Sequence[Tuple[int, int]]) -> Payoffs:
    """Payoffs when the player due after `bids` calls liar on the last (count, face) bid."""
    challenger = len(bids) % 2
    count, face = bids[-1]
    claim_holds = sum(1 for d in dice if d == face) >= count
    winner = 1 - challenger if claim_holds else challenger
    return (1.0, -1.0) if winner == 0 else (-1.0, 1.0)


def sheriff_payoff(n: int, bribes: Sequence[int], answers: Sequence[str]) -> Payoffs:
    bribe, answer = bribes[-1], answers[-1]
    if answer == "accept":
        return float(n - bribe), float(bribe)
    if n == 0:
        return CLEAN_INSPECTION_PAYOFF, -CLEAN_INSPECTION_PAYOFF
    return -CAUGHT_PENALTY_PER_ITEM * n, CAUGHT_PENALTY_PER_ITEM * n


def battleship_payoff(ships: Sequence[int], shots: Sequence[Tuple[str, int]]) -> Payoffs:
    """`shots` are (shooter, cell) with shooter "x" or "y"; the first hit ends the game."""
    ship_x, ship_y = ships
    for shooter, cell in shots:
        if shooter == "x" and cell == ship_y:
            return SHIP_VALUE, -LOSS_MULTIPLIER * SHIP_VALUE
        if shooter == "y" and cell == ship_x:
            return -LOSS_MULTIPLIER * SHIP_VALUE, SHIP_VALUE
    return 0.0, 0.0


def goofspiel_payoff(prizes: Sequence[int], bids_x: Sequence[int], bids_y: Sequence[int]) -> Payoffs:
    won_x = won_y = 0.0
    for prize, card_x, card_y in zip(prizes, bids_x, bids_y):
        if card_x > card_y:
            won_x += prize
        elif card_y > card_x:
            won_y += prize
    return won_x, won_y


BENCHMARK_BUILDERS = {
    "liars-dice": build_liars_dice,
    "sheriff": build_sheriff,
    "battleship": build_battleship,
    "goofspiel": build_goofspiel,
    "goofspiel-shuffled": lambda: build_goofspiel(shuffled=True),
}
