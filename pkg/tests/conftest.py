"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from flexcurve import (
    ChanceNode,
    DecisionNode,
    DecisionTree,
    TerminalNode,
    make_discrete,
    money_of_utility,
    utility_of_money,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


def random_discrete(rng, n_max=5, span=50):
    """Discrete prospect on an integer grid with coarse rational masses.

    Coarse masses keep mass gaps well above float noise, which the tail
    certificate checks rely on.
    """
    n = int(rng.integers(2, n_max + 1))
    values = rng.choice(np.arange(-span, span + 1), size=n, replace=False)
    weights = rng.integers(1, 20, size=n).astype(float)
    weights /= weights.sum()
    return make_discrete([(float(v), float(w)) for v, w in zip(values, weights)])


def expected_utility_ce(prospect, r):
    """Independent certain-equivalent oracle: expected utility, inverted.

    Works on explicit discrete prospects only, through the normalized
    exponential utility pair rather than the log-MGF route.
    """
    eu = math.fsum(
        m * utility_of_money(v, r) for v, m in zip(prospect.values, prospect.masses)
    )
    return money_of_utility(eu, r)


def random_tree(rng, depth=4, payoff_span=30.0, branching=(2, 3)):
    """Random decision tree of bounded depth alternating node kinds."""
    nodes = {}
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"n{counter[0]}"

    def build(level):
        nid = fresh()
        if level >= depth or rng.random() < 0.25:
            nodes[nid] = TerminalNode(float(rng.uniform(-payoff_span, payoff_span)))
            return nid
        width = int(rng.integers(branching[0], branching[1] + 1))
        children = [build(level + 1) for _ in range(width)]
        if rng.random() < 0.5:
            nodes[nid] = DecisionNode(tuple((f"opt{i}", c) for i, c in enumerate(children)))
        else:
            raw = rng.uniform(0.1, 1.0, size=width)
            probs = raw / raw.sum()
            nodes[nid] = ChanceNode(tuple((float(p), c) for p, c in zip(probs, children)))
        return nid

    root = build(0)
    return DecisionTree(nodes, root)


def utility_rollback(tree, r):
    """Rollback oracle in utility space: expected utility up the tree, then invert."""

    def value(nid):
        node = tree.nodes[nid]
        if isinstance(node, TerminalNode):
            return utility_of_money(node.payoff, r)
        if isinstance(node, ChanceNode):
            return math.fsum(p * value(cid) for p, cid in node.children)
        return max(value(cid) for _, cid in node.children)

    return money_of_utility(value(tree.root), r)
