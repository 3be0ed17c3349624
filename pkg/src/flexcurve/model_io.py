"""JSON model documents: parsing, validation, canonical emission.

A model document declares named prospects, an optional decision tree,
optional scenario blocks, and optional defaults for the risk aversion and
k grid.  Parsing validates every embedded invariant and reports failures
with the offending field path; emission is canonical so that
``parse_model(emit_model(doc)) == doc``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from .prospects import (
    Affine,
    Discrete,
    Gaussian,
    IndependentSum,
    Prospect,
    make_discrete,
    make_gaussian,
)
from .scenarios import AdaptiveSpec, Commitment, StiglerSpec
from .trees import ChanceNode, DecisionNode, DecisionTree, TerminalNode

__all__ = [
    "ModelError",
    "ModelDocument",
    "parse_model",
    "emit_model",
    "parse_k_grid",
]


class ModelError(ValueError):
    """Invalid model document; the message carries the offending field path."""


def parse_k_grid(text: str) -> Tuple[float, ...]:
    """Parse ``lo:hi:steps`` into a geometric grid including both endpoints."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ModelError(f"k grid must be lo:hi:steps, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError:
        raise ModelError(f"malformed k grid {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi):
        raise ModelError(f"k grid bounds must satisfy 0 < lo <= hi, got {text!r}")
    if steps < 1 or (steps == 1 and lo != hi):
        raise ModelError(f"k grid needs at least 2 steps when lo < hi, got {text!r}")
    if steps == 1:
        return (lo,)
    return tuple(float(k) for k in np.geomspace(lo, hi, steps))


@dataclass(frozen=True)
class ModelDocument:
    """Parsed model file: resolved objects plus the canonical raw specs."""

    prospect_specs: Mapping[str, Any]
    prospects: Mapping[str, Prospect]
    tree: Optional[DecisionTree] = None
    adaptive: Optional[AdaptiveSpec] = None
    stigler: Optional[StiglerSpec] = None
    default_r: Optional[float] = None
    default_k_grid: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "prospect_specs", dict(self.prospect_specs))
        object.__setattr__(self, "prospects", dict(self.prospects))


def _expect(condition: bool, path: str, reason: str) -> None:
    if not condition:
        raise ModelError(f"{path}: {reason}")


def _number(raw: Any, path: str) -> float:
    _expect(isinstance(raw, (int, float)) and not isinstance(raw, bool), path, "expected a number")
    value = float(raw)
    _expect(math.isfinite(value), path, "number must be finite")
    return value


def _pairs(raw: Any, path: str) -> Tuple[Tuple[float, float], ...]:
    _expect(isinstance(raw, list) and raw, path, "expected a nonempty list of pairs")
    out = []
    for i, item in enumerate(raw):
        _expect(isinstance(item, list) and len(item) == 2, f"{path}[{i}]", "expected a [a, b] pair")
        out.append((_number(item[0], f"{path}[{i}][0]"), _number(item[1], f"{path}[{i}][1]")))
    return tuple(out)


def _normalize_prospect_spec(pid: str, raw: Any, path: str) -> Dict[str, Any]:
    _expect(isinstance(raw, dict), path, "expected an object")
    kind = raw.get("kind")
    if kind == "discrete":
        points = _pairs(raw.get("points"), f"{path}.points")
        return {"kind": "discrete", "points": points}
    if kind == "gaussian":
        return {
            "kind": "gaussian",
            "mean": _number(raw.get("mean"), f"{path}.mean"),
            "variance": _number(raw.get("variance"), f"{path}.variance"),
        }
    if kind == "affine":
        base = raw.get("base")
        _expect(isinstance(base, str), f"{path}.base", "expected a prospect id")
        return {
            "kind": "affine",
            "base": base,
            "scale": _number(raw.get("scale"), f"{path}.scale"),
            "offset": _number(raw.get("offset"), f"{path}.offset"),
        }
    if kind == "sum":
        terms = raw.get("terms")
        _expect(isinstance(terms, list) and terms, f"{path}.terms", "expected a nonempty id list")
        for i, t in enumerate(terms):
            _expect(isinstance(t, str), f"{path}.terms[{i}]", "expected a prospect id")
        return {"kind": "sum", "terms": tuple(terms)}
    raise ModelError(f"{path}.kind: unknown prospect kind {kind!r}")


def _resolve_prospects(specs: Mapping[str, Dict[str, Any]]) -> Dict[str, Prospect]:
    resolved: Dict[str, Prospect] = {}
    resolving: set[str] = set()

    def resolve(pid: str, path: str) -> Prospect:
        if pid in resolved:
            return resolved[pid]
        _expect(pid in specs, path, f"unknown prospect id {pid!r}")
        _expect(pid not in resolving, path, f"circular reference through {pid!r}")
        resolving.add(pid)
        spec = specs[pid]
        where = f"prospects.{pid}"
        try:
            if spec["kind"] == "discrete":
                prospect: Prospect = make_discrete(spec["points"])
            elif spec["kind"] == "gaussian":
                prospect = make_gaussian(spec["mean"], spec["variance"])
            elif spec["kind"] == "affine":
                prospect = Affine(resolve(spec["base"], f"{where}.base"), spec["scale"], spec["offset"])
            else:
                prospect = IndependentSum(
                    tuple(resolve(t, f"{where}.terms") for t in spec["terms"])
                )
        except ModelError:
            raise
        except ValueError as exc:
            raise ModelError(f"{where}: {exc}") from None
        resolving.discard(pid)
        resolved[pid] = prospect
        return prospect

    for pid in specs:
        resolve(pid, f"prospects.{pid}")
    return resolved


def _canonical_discrete_spec(prospect: Discrete) -> Dict[str, Any]:
    return {
        "kind": "discrete",
        "points": tuple(zip(prospect.values, prospect.masses)),
    }


def _parse_tree(raw: Any, path: str) -> DecisionTree:
    _expect(isinstance(raw, dict), path, "expected an object")
    root = raw.get("root")
    _expect(isinstance(root, str), f"{path}.root", "expected a node id")
    raw_nodes = raw.get("nodes")
    _expect(isinstance(raw_nodes, dict) and raw_nodes, f"{path}.nodes", "expected a nonempty object")
    nodes: Dict[str, Any] = {}
    for nid, node in raw_nodes.items():
        npath = f"{path}.nodes.{nid}"
        _expect(isinstance(node, dict), npath, "expected an object")
        kind = node.get("kind")
        if kind == "terminal":
            nodes[nid] = TerminalNode(_number(node.get("payoff"), f"{npath}.payoff"))
        elif kind == "decision":
            children = node.get("children")
            _expect(isinstance(children, list) and children, f"{npath}.children", "expected a nonempty list")
            out = []
            for i, item in enumerate(children):
                _expect(
                    isinstance(item, list) and len(item) == 2 and isinstance(item[0], str) and isinstance(item[1], str),
                    f"{npath}.children[{i}]",
                    "expected a [label, node-id] pair",
                )
                out.append((item[0], item[1]))
            nodes[nid] = DecisionNode(tuple(out))
        elif kind == "chance":
            children = node.get("children")
            _expect(isinstance(children, list) and children, f"{npath}.children", "expected a nonempty list")
            out = []
            for i, item in enumerate(children):
                _expect(
                    isinstance(item, list) and len(item) == 2 and isinstance(item[1], str),
                    f"{npath}.children[{i}]",
                    "expected a [probability, node-id] pair",
                )
                out.append((_number(item[0], f"{npath}.children[{i}][0]"), item[1]))
            nodes[nid] = ChanceNode(tuple(out))
        else:
            raise ModelError(f"{npath}.kind: unknown node kind {kind!r}")
    try:
        return DecisionTree(nodes, root)
    except ValueError as exc:
        raise ModelError(f"{path}: {exc}") from None


def _parse_adaptive(raw: Any, path: str) -> AdaptiveSpec:
    _expect(isinstance(raw, dict), path, "expected an object")
    raw_commitments = raw.get("commitments")
    _expect(isinstance(raw_commitments, list) and raw_commitments, f"{path}.commitments", "expected a nonempty list")
    commitments = []
    for i, item in enumerate(raw_commitments):
        cpath = f"{path}.commitments[{i}]"
        _expect(isinstance(item, dict), cpath, "expected an object")
        label = item.get("label")
        _expect(isinstance(label, str), f"{cpath}.label", "expected a string")
        allows = item.get("allows_reaction")
        _expect(isinstance(allows, bool), f"{cpath}.allows_reaction", "expected a boolean")
        locked = item.get("locked_action")
        _expect(
            locked is None or isinstance(locked, str), f"{cpath}.locked_action", "expected a string"
        )
        commitments.append(
            Commitment(label, _number(item.get("cost"), f"{cpath}.cost"), allows, locked)
        )
    raw_obs = raw.get("observations")
    if isinstance(raw_obs, dict):
        observations: Any = {
            c: _obs_pairs(v, f"{path}.observations.{c}") for c, v in raw_obs.items()
        }
    elif isinstance(raw_obs, list):
        observations = _obs_pairs(raw_obs, f"{path}.observations")
    else:
        raise ModelError(f"{path}.observations: expected a list or per-commitment object")
    reactions = raw.get("reactions")
    _expect(isinstance(reactions, list) and reactions, f"{path}.reactions", "expected a nonempty list")
    raw_payoffs = raw.get("payoffs")
    _expect(isinstance(raw_payoffs, dict), f"{path}.payoffs", "expected an object")
    payoffs: Dict[Tuple[str, str, str], float] = {}
    for c, by_obs in raw_payoffs.items():
        _expect(isinstance(by_obs, dict), f"{path}.payoffs.{c}", "expected an object")
        for o, by_act in by_obs.items():
            _expect(isinstance(by_act, dict), f"{path}.payoffs.{c}.{o}", "expected an object")
            for a, v in by_act.items():
                payoffs[(c, o, a)] = _number(v, f"{path}.payoffs.{c}.{o}.{a}")
    try:
        return AdaptiveSpec(tuple(commitments), observations, tuple(reactions), payoffs)
    except ValueError as exc:
        raise ModelError(f"{path}: {exc}") from None


def _obs_pairs(raw: Any, path: str) -> Tuple[Tuple[str, float], ...]:
    _expect(isinstance(raw, list) and raw, path, "expected a nonempty list")
    out = []
    for i, item in enumerate(raw):
        _expect(
            isinstance(item, list) and len(item) == 2 and isinstance(item[0], str),
            f"{path}[{i}]",
            "expected a [label, probability] pair",
        )
        out.append((item[0], _number(item[1], f"{path}[{i}][1]")))
    return tuple(out)


def _parse_stigler(raw: Any, path: str) -> StiglerSpec:
    _expect(isinstance(raw, dict), path, "expected an object")
    grid = _pairs(raw.get("quantities"), f"{path}.quantities")
    cost_one = _pairs(raw.get("cost1"), f"{path}.cost1")
    cost_two = _pairs(raw.get("cost2"), f"{path}.cost2")
    try:
        return StiglerSpec(grid, dict(cost_one), dict(cost_two))
    except ValueError as exc:
        raise ModelError(f"{path}: {exc}") from None


def parse_model(text: str | bytes) -> ModelDocument:
    """Parse and fully validate a JSON model document."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelError(f"document is not valid UTF-8: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    _expect(isinstance(raw, dict), "document", "top level must be an object")

    raw_prospects = raw.get("prospects", {})
    _expect(isinstance(raw_prospects, dict), "prospects", "expected an object")
    specs = {
        pid: _normalize_prospect_spec(pid, spec, f"prospects.{pid}")
        for pid, spec in raw_prospects.items()
    }
    prospects = _resolve_prospects(specs)
    # Canonicalize discrete specs to the merged / sorted / renormalized form
    # so emission is stable under re-parsing.
    for pid, prospect in prospects.items():
        if specs[pid]["kind"] == "discrete":
            specs[pid] = _canonical_discrete_spec(prospect)

    tree = None
    if "tree" in raw:
        tree = _parse_tree(raw["tree"], "tree")

    adaptive = stigler = None
    if "scenarios" in raw:
        scen = raw["scenarios"]
        _expect(isinstance(scen, dict), "scenarios", "expected an object")
        if "adaptive" in scen:
            adaptive = _parse_adaptive(scen["adaptive"], "scenarios.adaptive")
        if "stigler" in scen:
            stigler = _parse_stigler(scen["stigler"], "scenarios.stigler")

    default_r = None
    default_k = None
    if "defaults" in raw:
        defaults = raw["defaults"]
        _expect(isinstance(defaults, dict), "defaults", "expected an object")
        if "r" in defaults:
            default_r = _number(defaults["r"], "defaults.r")
            _expect(default_r >= 0.0, "defaults.r", "risk aversion must be nonnegative")
        if "k" in defaults:
            _expect(isinstance(defaults["k"], str), "defaults.k", "expected a lo:hi:steps string")
            parse_k_grid(defaults["k"])
            default_k = defaults["k"]

    return ModelDocument(specs, prospects, tree, adaptive, stigler, default_r, default_k)


def _spec_to_json(spec: Mapping[str, Any]) -> Dict[str, Any]:
    if spec["kind"] == "discrete":
        return {"kind": "discrete", "points": [[v, m] for v, m in spec["points"]]}
    if spec["kind"] == "sum":
        return {"kind": "sum", "terms": list(spec["terms"])}
    return dict(spec)


def _tree_to_json(tree: DecisionTree) -> Dict[str, Any]:
    nodes: Dict[str, Any] = {}
    for nid, node in tree.nodes.items():
        if isinstance(node, TerminalNode):
            nodes[nid] = {"kind": "terminal", "payoff": node.payoff}
        elif isinstance(node, DecisionNode):
            nodes[nid] = {
                "kind": "decision",
                "children": [[label, cid] for label, cid in node.children],
            }
        else:
            nodes[nid] = {
                "kind": "chance",
                "children": [[p, cid] for p, cid in node.children],
            }
    return {"root": tree.root, "nodes": nodes}


def _adaptive_to_json(spec: AdaptiveSpec) -> Dict[str, Any]:
    payoffs: Dict[str, Dict[str, Dict[str, float]]] = {}
    for (c, o, a), v in spec.payoffs.items():
        payoffs.setdefault(c, {}).setdefault(o, {})[a] = v
    return {
        "commitments": [
            {
                "label": c.label,
                "cost": c.cost,
                "allows_reaction": c.allows_reaction,
                **({} if c.locked_action is None else {"locked_action": c.locked_action}),
            }
            for c in spec.commitments
        ],
        "observations": {
            c: [[o, p] for o, p in obs] for c, obs in spec.observations.items()
        },
        "reactions": list(spec.reactions),
        "payoffs": payoffs,
    }


def _stigler_to_json(spec: StiglerSpec) -> Dict[str, Any]:
    return {
        "quantities": [[q, p] for q, p in spec.quantity_grid],
        "cost1": [[q, spec.cost_one[q]] for q in sorted(spec.cost_one)],
        "cost2": [[q, spec.cost_two[q]] for q in sorted(spec.cost_two)],
    }


def emit_model(doc: ModelDocument) -> str:
    """Canonical JSON serialization; inverse of :func:`parse_model`."""
    out: Dict[str, Any] = {
        "prospects": {pid: _spec_to_json(spec) for pid, spec in doc.prospect_specs.items()}
    }
    if doc.tree is not None:
        out["tree"] = _tree_to_json(doc.tree)
    scenarios: Dict[str, Any] = {}
    if doc.adaptive is not None:
        scenarios["adaptive"] = _adaptive_to_json(doc.adaptive)
    if doc.stigler is not None:
        scenarios["stigler"] = _stigler_to_json(doc.stigler)
    if scenarios:
        out["scenarios"] = scenarios
    defaults: Dict[str, Any] = {}
    if doc.default_r is not None:
        defaults["r"] = doc.default_r
    if doc.default_k_grid is not None:
        defaults["k"] = doc.default_k_grid
    if defaults:
        out["defaults"] = defaults
    return json.dumps(out, indent=2, sort_keys=True) + "\n"
