"""Built-in scenario templates.

Two generators cover the classic shapes of the flexibility question: a
robust choice between two cost curves under an uncertain quantity, and an
adaptive commit-observe-react plan compiled into a decision tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

from .prospects import Discrete, make_discrete
from .trees import ChanceNode, DecisionNode, DecisionTree, TerminalNode

__all__ = [
    "Commitment",
    "AdaptiveSpec",
    "StiglerSpec",
    "adaptive_template",
    "stigler_scenario",
]

_PROB_SUM_TOL = 1e-9

ObservationTable = Union[
    Sequence[Tuple[str, float]],
    Mapping[str, Sequence[Tuple[str, float]]],
]


@dataclass(frozen=True)
class Commitment:
    """One commitment alternative; rigid commitments carry a locked action."""

    label: str
    cost: float
    allows_reaction: bool
    locked_action: Optional[str] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.cost):
            raise ValueError(f"commitment cost must be finite, got {self.cost!r}")
        if self.allows_reaction and self.locked_action is not None:
            raise ValueError(
                f"commitment {self.label!r} allows reaction but has a locked action"
            )
        if not self.allows_reaction and self.locked_action is None:
            raise ValueError(
                f"commitment {self.label!r} forbids reaction but has no locked action"
            )


@dataclass(frozen=True)
class AdaptiveSpec:
    """Commit-observe-react template.

    Observations may be shared (a single sequence) or conditioned on the
    commitment (a mapping from commitment label); both forms normalize to
    the per-commitment mapping.  Payoffs map (commitment, observation,
    action) triples to money.
    """

    commitments: Tuple[Commitment, ...]
    observations: ObservationTable
    reactions: Tuple[str, ...]
    payoffs: Mapping[Tuple[str, str, str], float]

    def __post_init__(self) -> None:
        if not self.commitments:
            raise ValueError("need at least one commitment")
        labels = [c.label for c in self.commitments]
        if len(set(labels)) != len(labels):
            raise ValueError("commitment labels must be unique")
        if not self.reactions:
            raise ValueError("need at least one reaction")
        if isinstance(self.observations, Mapping):
            table = {
                str(c): tuple((str(o), float(p)) for o, p in obs)
                for c, obs in self.observations.items()
            }
        else:
            shared = tuple((str(o), float(p)) for o, p in self.observations)
            table = {label: shared for label in labels}
        for label in labels:
            if label not in table:
                raise ValueError(f"no observations for commitment {label!r}")
            obs = table[label]
            if not obs:
                raise ValueError(f"empty observation list for commitment {label!r}")
            if any(not (p > 0.0) for _, p in obs):
                raise ValueError(f"nonpositive observation probability under {label!r}")
            total = math.fsum(p for _, p in obs)
            if abs(total - 1.0) > _PROB_SUM_TOL:
                raise ValueError(
                    f"observation probabilities under {label!r} sum to {total!r}"
                )
        object.__setattr__(self, "observations", table)
        object.__setattr__(
            self,
            "payoffs",
            {
                (str(c), str(o), str(a)): float(v)
                for (c, o, a), v in dict(self.payoffs).items()
            },
        )
        object.__setattr__(self, "commitments", tuple(self.commitments))
        object.__setattr__(self, "reactions", tuple(str(a) for a in self.reactions))


def adaptive_template(spec: AdaptiveSpec) -> DecisionTree:
    """Expand the commit-observe-react template into a decision tree.

    Root decision over commitments; each commitment leads to a chance node
    over its observations; a flexible commitment then decides among all
    reactions while a rigid one goes straight to its locked action.  Every
    terminal payoff is the payoff triple minus the commitment cost.
    """
    nodes: Dict[str, object] = {}

    def payoff(c: str, o: str, a: str) -> float:
        try:
            return spec.payoffs[(c, o, a)]
        except KeyError:
            raise ValueError(f"payoff missing for reachable triple {(c, o, a)!r}") from None

    root_children = []
    for commitment in spec.commitments:
        c = commitment.label
        obs_children = []
        for o, p in spec.observations[c]:
            if commitment.allows_reaction:
                react_children = []
                for a in spec.reactions:
                    tid = f"end:{c}/{o}/{a}"
                    nodes[tid] = TerminalNode(payoff(c, o, a) - commitment.cost)
                    react_children.append((a, tid))
                did = f"react:{c}/{o}"
                nodes[did] = DecisionNode(tuple(react_children))
                obs_children.append((p, did))
            else:
                a = commitment.locked_action
                tid = f"end:{c}/{o}/{a}"
                nodes[tid] = TerminalNode(payoff(c, o, a) - commitment.cost)
                obs_children.append((p, tid))
        cid = f"commit:{c}"
        nodes[cid] = ChanceNode(tuple(obs_children))
        root_children.append((c, cid))
    nodes["root"] = DecisionNode(tuple(root_children))
    return DecisionTree(nodes, "root")


@dataclass(frozen=True)
class StiglerSpec:
    """Two cost curves evaluated on a shared uncertain quantity grid."""

    quantity_grid: Tuple[Tuple[float, float], ...]
    cost_one: Mapping[float, float]
    cost_two: Mapping[float, float]

    def __post_init__(self) -> None:
        grid = tuple((float(q), float(p)) for q, p in self.quantity_grid)
        if not grid:
            raise ValueError("quantity grid must be nonempty")
        if any(not (p > 0.0) for _, p in grid):
            raise ValueError("quantity probabilities must be positive")
        total = math.fsum(p for _, p in grid)
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"quantity probabilities sum to {total!r}, expected 1")
        cost_one = {float(q): float(c) for q, c in dict(self.cost_one).items()}
        cost_two = {float(q): float(c) for q, c in dict(self.cost_two).items()}
        for q, _ in grid:
            for name, curve in (("cost_one", cost_one), ("cost_two", cost_two)):
                if q not in curve:
                    raise ValueError(f"{name} has no cost for quantity {q!r}")
                if not math.isfinite(curve[q]):
                    raise ValueError(f"{name} cost at quantity {q!r} is not finite")
        object.__setattr__(self, "quantity_grid", grid)
        object.__setattr__(self, "cost_one", cost_one)
        object.__setattr__(self, "cost_two", cost_two)


def stigler_scenario(spec: StiglerSpec) -> Tuple[Discrete, Discrete]:
    """Value prospects (negated costs) for the two cost curves."""
    one = make_discrete([(-spec.cost_one[q], p) for q, p in spec.quantity_grid])
    two = make_discrete([(-spec.cost_two[q], p) for q, p in spec.quantity_grid])
    return one, two
