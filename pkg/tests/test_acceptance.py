"""Acceptance checks.

Each test prints one PASS or FAIL line on the real stdout so the summary
survives pytest capture, then asserts the same condition.
"""

import math
import sys

import numpy as np
import pytest

from flexcurve import (
    ChanceNode,
    DecisionNode,
    DecisionTree,
    Flexibility,
    TailRelation,
    TerminalNode,
    add_independent,
    certain_equivalent,
    compare,
    enumerate_policies,
    find_threshold,
    flexibility_curve,
    make_discrete,
    make_gaussian,
    node_curve,
    policy_prospect,
    rollback,
    scale,
    shift,
    stats,
    tail_order,
    upper_envelope,
)

from conftest import (
    expected_utility_ce,
    random_discrete,
    random_tree,
    utility_rollback,
)


def report(number, ok, label):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {number:2d}: {status} - {label}", file=sys.__stdout__)
    assert ok, f"criterion {number} failed: {label}"


@pytest.fixture
def rng():
    return np.random.default_rng(715)


def test_01_delta_property(rng):
    worst = 0.0
    for _ in range(200):
        x = random_discrete(rng)
        c = float(rng.uniform(-100, 100))
        for r in (0.01, 0.1, 1.0):
            gap = abs(
                certain_equivalent(shift(x, c), r) - certain_equivalent(x, r) - c
            )
            worst = max(worst, gap)
    report(1, worst <= 1e-9, f"delta property, max residual {worst:.3g}")


def test_02_linear_transformation_identity(rng):
    worst = 0.0
    for _ in range(200):
        x, z = random_discrete(rng), random_discrete(rng)
        k = float(rng.uniform(1.0, 10.0))
        r = float(rng.choice([0.01, 0.1, 0.5]))
        lhs = certain_equivalent(add_independent(scale(x, k), z), r)
        rhs = k * certain_equivalent(x, k * r) + certain_equivalent(z, r)
        worst = max(worst, abs(lhs - rhs))
    report(2, worst <= 1e-9, f"scaled-sum identity, max residual {worst:.3g}")


def test_03_gaussian_linearity(rng):
    worst = 0.0
    for _ in range(50):
        mu = float(rng.uniform(-50, 50))
        var = float(rng.uniform(0, 100))
        r = float(10 ** rng.uniform(-4, 0))
        ks = tuple(np.geomspace(1, 100, 64))
        curve = flexibility_curve(make_gaussian(mu, var), r, ks)
        for k, ce in curve.samples:
            expected = mu - 0.5 * var * k * r
            worst = max(worst, abs(ce - expected) / (1 + abs(ce)))
    report(3, worst <= 1e-12, f"Gaussian curve linearity, max residual {worst:.3g}")


def test_04_worst_case_limit(rng):
    ok = True
    for _ in range(100):
        x = random_discrete(rng)
        worst_case = stats(x).worst_case
        p_min = x.masses[0]  # mass at the lowest support value
        ce = certain_equivalent(x, 1e6)
        upper = worst_case - math.log(p_min) / 1e6 + 1e-6
        ok = ok and (worst_case < ce <= upper)
    report(4, ok, "deep-tail CE pinned to the worst case")


def test_05_curves_nonincreasing(rng):
    ok = True
    ks = tuple(np.geomspace(1, 100, 64))
    for _ in range(50):
        g = make_gaussian(float(rng.uniform(-50, 50)), float(rng.uniform(0, 100)))
        curve = flexibility_curve(g, float(10 ** rng.uniform(-4, 0)), ks)
        ok = ok and all(b <= a + 1e-9 for a, b in zip(curve.ces, curve.ces[1:]))
    for _ in range(100):
        curve = flexibility_curve(random_discrete(rng), 0.05, ks)
        ok = ok and all(b <= a + 1e-9 for a, b in zip(curve.ces, curve.ces[1:]))
    report(5, ok, "flexibility curves nonincreasing for r > 0")


def test_06_deterministic_indifference_dominance(rng):
    ok = True
    for _ in range(50):
        x = random_discrete(rng)
        r = float(rng.choice([0.01, 0.1, 0.5]))
        y = make_discrete([(certain_equivalent(x, r), 1.0)])
        verdict = compare(x, y, r)
        ok = ok and verdict.classification in (
            Flexibility.Y_DOMINATES,
            Flexibility.Y_STRICTLY_DOMINATES,
        )
    report(6, ok, "deterministic indifferent prospect dominates")


def test_07_choose_later_dominance_chain(rng):
    ks = tuple(np.geomspace(1, 100, 32))
    ok = True
    for _ in range(100):
        lo_c, hi_c = sorted(rng.uniform(-50, 50, size=2))
        lo_d, hi_d = sorted(rng.uniform(-50, 50, size=2))
        p_c = float(rng.uniform(0.1, 0.9))
        p_d = float(rng.uniform(0.1, 0.9))

        def chance(tag, lo, hi, p):
            return {
                tag: ChanceNode(((p, f"{tag}0"), (1 - p, f"{tag}1"))),
                f"{tag}0": TerminalNode(float(lo)),
                f"{tag}1": TerminalNode(float(hi)),
            }

        nodes = {
            "A": DecisionNode((("now", "B"), ("wait", "E"))),
            "B": DecisionNode((("c", "C"), ("d", "D"))),
            "E": DecisionNode((("c", "C2"), ("d", "D2"))),
        }
        nodes.update(chance("C", lo_c, hi_c, p_c))
        nodes.update(chance("D", lo_d, hi_d, p_d))
        nodes.update(chance("C2", lo_c, hi_c, p_c))
        nodes.update(chance("D2", lo_d, hi_d, p_d))
        tree = DecisionTree(nodes, "A")
        curves = {nid: node_curve(tree, nid, 0.02, ks) for nid in "ABCDE"}
        for i in range(len(ks)):
            top = curves["A"].ces[i]
            ok = ok and all(top >= curves[o].ces[i] - 1e-9 for o in "BCDE")
    report(7, ok, "free later choice dominates every earlier commitment")


def test_08_threshold_reproduction():
    x = make_discrete([(0, 0.5), (100, 0.5)])
    y = make_discrete([(10, 1.0)])
    r = 0.01
    k = find_threshold(y, x, r)

    def g(kk):
        return expected_utility_ce(y, kk * r) - expected_utility_ce(x, kk * r)

    lo, hi = 1.0, 100.0
    assert g(lo) < 0 < g(hi)
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    oracle = 0.5 * (lo + hi)
    ok = abs(k - 6.92) <= 0.05 and abs(k - oracle) <= 1e-6 * oracle
    report(8, ok, f"threshold K = {k:.6f} vs oracle {oracle:.6f}")


def test_09_tail_certificate_soundness(rng):
    agree = 0
    total = 1000
    r = 0.1
    for _ in range(total):
        x, y = random_discrete(rng), random_discrete(rng)
        verdict = tail_order(x, y, r)
        k = 2 * verdict.certified_from
        gap = certain_equivalent(x, k * r) - certain_equivalent(y, k * r)
        if verdict.relation is TailRelation.EQUAL:
            agree += abs(gap) <= 1e-9
        elif verdict.relation is TailRelation.X_ABOVE:
            agree += gap > 0
        else:
            agree += gap < 0
    report(9, agree == total, f"tail certificates sound in {agree}/{total} cases")


def _policy_count(tree, nid):
    node = tree.nodes[nid]
    if isinstance(node, TerminalNode):
        return 1
    if isinstance(node, DecisionNode):
        return sum(_policy_count(tree, cid) for _, cid in node.children)
    out = 1
    for _, cid in node.children:
        out *= _policy_count(tree, cid)
    return out


def test_10_rollback_oracles(rng):
    worst_u = 0.0
    worst_p = 0.0
    for _ in range(200):
        tree = random_tree(rng, depth=5)
        while _policy_count(tree, tree.root) > 300:
            tree = random_tree(rng, depth=5)
        r = float(rng.choice([0.01, 0.05, 0.1]))
        ce, _ = rollback(tree, r)
        worst_u = max(worst_u, abs(ce - utility_rollback(tree, r)))
        best = max(
            certain_equivalent(policy_prospect(tree, p), r)
            for p in enumerate_policies(tree)
        )
        worst_p = max(worst_p, abs(ce - best))
    ok = worst_u <= 1e-9 and worst_p <= 1e-9
    report(10, ok, f"rollback residuals {worst_u:.3g} (utility), {worst_p:.3g} (policies)")


def test_11_gaussian_crossing():
    k = find_threshold(make_gaussian(-55, 100), make_gaussian(-50, 400), 0.01)
    ok = k is not None and abs(k - 10.0 / 3.0) <= 1e-6 * (10.0 / 3.0)
    report(11, ok, f"Gaussian cost crossing at k = {k:.9f}")


def test_12_envelope_excludes_middle_line():
    items = [
        ("A", make_gaussian(10, 2)),
        ("B", make_gaussian(9, 1.9)),
        ("C", make_gaussian(8, 0.2)),
    ]
    segments = upper_envelope(items, 1.0, (1.0, 10.0))
    never_b = all("B" not in seg.ids for seg in segments)
    cut = segments[0].k_hi
    ok = never_b and abs(cut - 20.0 / 9.0) <= 1e-6 * (20.0 / 9.0)
    report(12, ok, f"middle line absent, breakpoint at k = {cut:.9f}")


def test_13_preference_sign_equivalence(rng):
    ok = True
    for _ in range(500):
        x, y, z = (random_discrete(rng) for _ in range(3))
        k = float(rng.uniform(1.0, 10.0))
        r = float(rng.choice([0.01, 0.1, 0.5]))
        direct = certain_equivalent(x, k * r) - certain_equivalent(y, k * r)
        if abs(direct) <= 1e-9:
            continue
        lhs = certain_equivalent(add_independent(scale(x, k), z), r)
        rhs = certain_equivalent(add_independent(scale(y, k), z), r)
        ok = ok and ((lhs > rhs) == (direct > 0))
    report(13, ok, "preference between scaled sums matches the distorted CE sign")
