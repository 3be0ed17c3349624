"""Uncertain monetary prospects and the distortion algebra over them.

A prospect is a probability distribution over a single monetary attribute.
Four representations are supported: finite discrete distributions,
Gaussians, affine transforms k*X + c with k > 0, and sums of mutually
independent prospects.  Everything downstream (certain equivalents,
flexibility curves, orderings) is driven by the log moment generating
function, so each representation only has to know how to evaluate
ln E{exp(t*X)} and its exact mean / variance / worst case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Discrete",
    "Gaussian",
    "Affine",
    "IndependentSum",
    "Prospect",
    "ProspectStats",
    "make_discrete",
    "make_gaussian",
    "scale",
    "shift",
    "add_independent",
    "log_mgf",
    "stats",
    "MASS_SUM_TOLERANCE",
    "CONVOLUTION_SUPPORT_CAP",
]

# Hand-authored mass lists may carry rounding; within this slack they are
# renormalized, beyond it they are rejected as modeling errors.
MASS_SUM_TOLERANCE = 1e-9

# Tightness required of a constructed Discrete after normalization.
_MASS_SUM_EXACT = 1e-12

# Exact convolution is abandoned in favor of a lazy IndependentSum once the
# product support would exceed this many points.
CONVOLUTION_SUPPORT_CAP = 1_000_000


def _require_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Discrete:
    """Finite distribution over distinct, strictly ascending money values."""

    values: Tuple[float, ...]
    masses: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("discrete prospect needs at least one outcome")
        if len(self.values) != len(self.masses):
            raise ValueError("values and masses must have equal length")
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"non-finite support value {v!r}")
        for m in self.masses:
            if not (m > 0.0):
                raise ValueError(f"mass must be positive, got {m!r}")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("support values must be strictly ascending")
        total = math.fsum(self.masses)
        if abs(total - 1.0) > _MASS_SUM_EXACT:
            raise ValueError(f"masses sum to {total!r}, expected 1 within {_MASS_SUM_EXACT}")


@dataclass(frozen=True)
class Gaussian:
    """Gaussian prospect; variance 0 behaves as a deterministic value."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        _require_finite(self.mean, "mean")
        _require_finite(self.variance, "variance")
        if self.variance < 0.0:
            raise ValueError(f"variance must be nonnegative, got {self.variance!r}")


@dataclass(frozen=True)
class Affine:
    """Prospect distributed as scale * base + offset, scale > 0."""

    base: "Prospect"
    scale: float
    offset: float

    def __post_init__(self) -> None:
        _require_finite(self.offset, "offset")
        s = _require_finite(self.scale, "scale")
        if s <= 0.0:
            raise ValueError(f"scale must be positive, got {s!r}")


@dataclass(frozen=True)
class IndependentSum:
    """Sum of mutually independent prospects, evaluated lazily via the MGF."""

    terms: Tuple["Prospect", ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("independent sum needs at least one term")


Prospect = Union[Discrete, Gaussian, Affine, IndependentSum]


@dataclass(frozen=True)
class ProspectStats:
    """Exact mean, variance and essential infimum of a prospect."""

    mean: float
    variance: float
    worst_case: float


def make_discrete(pairs: Iterable[Tuple[float, float]]) -> Discrete:
    """Build a discrete prospect from (value, mass) pairs.

    Duplicate values are merged by summing their masses, the support is
    sorted ascending, and masses within ``MASS_SUM_TOLERANCE`` of total 1
    are renormalized to sum exactly 1.
    """
    items = list(pairs)
    if not items:
        raise ValueError("discrete prospect needs at least one (value, mass) pair")
    merged: dict[float, float] = {}
    for value, mass in items:
        value = _require_finite(value, "support value")
        mass = float(mass)
        if not (math.isfinite(mass) and mass > 0.0):
            raise ValueError(f"mass must be positive and finite, got {mass!r}")
        merged[value] = merged.get(value, 0.0) + mass
    total = math.fsum(merged.values())
    if abs(total - 1.0) > MASS_SUM_TOLERANCE:
        raise ValueError(
            f"masses sum to {total!r}, outside tolerance {MASS_SUM_TOLERANCE} of 1"
        )
    values = tuple(sorted(merged))
    masses = tuple(merged[v] / total for v in values)
    return Discrete(values, masses)


def make_gaussian(mean: float, variance: float) -> Gaussian:
    """Build a Gaussian prospect; variance 0 is a deterministic value."""
    return Gaussian(_require_finite(mean, "mean"), _require_finite(variance, "variance"))


def scale(prospect: Prospect, k: float) -> Prospect:
    """Prospect distributed as k * X for k > 0."""
    k = float(k)
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"scale factor must be positive and finite, got {k!r}")
    if isinstance(prospect, Discrete):
        return Discrete(tuple(v * k for v in prospect.values), prospect.masses)
    if isinstance(prospect, Gaussian):
        return Gaussian(prospect.mean * k, prospect.variance * k * k)
    if isinstance(prospect, Affine):
        return Affine(prospect.base, prospect.scale * k, prospect.offset * k)
    if isinstance(prospect, IndependentSum):
        return IndependentSum(tuple(scale(t, k) for t in prospect.terms))
    raise TypeError(f"not a prospect: {prospect!r}")


def shift(prospect: Prospect, c: float) -> Prospect:
    """Prospect distributed as X + c."""
    c = _require_finite(c, "shift amount")
    if isinstance(prospect, Discrete):
        return Discrete(tuple(v + c for v in prospect.values), prospect.masses)
    if isinstance(prospect, Gaussian):
        return Gaussian(prospect.mean + c, prospect.variance)
    if isinstance(prospect, Affine):
        return Affine(prospect.base, prospect.scale, prospect.offset + c)
    if isinstance(prospect, IndependentSum):
        return Affine(prospect, 1.0, c)
    raise TypeError(f"not a prospect: {prospect!r}")


def _merge_sorted(values: Sequence[float], masses: Sequence[float]) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Merge exactly-equal neighbors in an already sorted support."""
    out_v: list[float] = []
    out_m: list[float] = []
    for v, m in zip(values, masses):
        if out_v and v == out_v[-1]:
            out_m[-1] += m
        else:
            out_v.append(v)
            out_m.append(m)
    return tuple(out_v), tuple(out_m)


def convolve_supports(
    x: Discrete, z: Discrete
) -> Tuple[Tuple[float, ...], Tuple[float, ...]] | None:
    """Exact convolution support of two discrete prospects.

    Returns None when the pairwise-sum support would exceed the cap.
    Values equal to the bit are merged; there is no epsilon merging.
    """
    if len(x.values) * len(z.values) > CONVOLUTION_SUPPORT_CAP:
        return None
    sums = np.add.outer(np.asarray(x.values), np.asarray(z.values)).ravel()
    weights = np.multiply.outer(np.asarray(x.masses), np.asarray(z.masses)).ravel()
    uniq, inverse = np.unique(sums, return_inverse=True)
    agg = np.bincount(inverse, weights=weights, minlength=len(uniq))
    total = math.fsum(agg.tolist())
    return tuple(uniq.tolist()), tuple((agg / total).tolist())


def _sum_terms(prospect: Prospect) -> Tuple[Prospect, ...]:
    if isinstance(prospect, IndependentSum):
        return prospect.terms
    return (prospect,)


def add_independent(x: Prospect, z: Prospect) -> Prospect:
    """Prospect distributed as X + Z with X and Z independent.

    Discrete + Discrete gives the exact convolution (unless the support cap
    is hit), Gaussian + Gaussian stays Gaussian, everything else is a lazy
    IndependentSum evaluated through the MGF.
    """
    if isinstance(x, Discrete) and isinstance(z, Discrete):
        merged = convolve_supports(x, z)
        if merged is not None:
            return Discrete(*merged)
    if isinstance(x, Gaussian) and isinstance(z, Gaussian):
        return Gaussian(x.mean + z.mean, x.variance + z.variance)
    return IndependentSum(_sum_terms(x) + _sum_terms(z))


def log_mgf(prospect: Prospect, t: float) -> float:
    """Evaluate ln E{exp(t*X)}.

    Discrete prospects use a max-shifted exponential sum; Affine and
    IndependentSum nodes compose through the standard MGF identities.
    """
    t = _require_finite(t, "MGF argument t")
    if isinstance(prospect, Discrete):
        with np.errstate(over="ignore"):
            exponents = np.asarray(prospect.values) * t
        if not np.all(np.isfinite(exponents)):
            worst = float(np.max(np.abs(exponents)))
            raise OverflowError(f"log-MGF overflow: |t*value| reaches {worst!r}")
        return float(logsumexp(exponents, b=np.asarray(prospect.masses)))
    if isinstance(prospect, Gaussian):
        out = prospect.mean * t + 0.5 * prospect.variance * t * t
        if not math.isfinite(out):
            raise OverflowError(f"log-MGF overflow: Gaussian exponent {out!r} at t={t!r}")
        return out
    if isinstance(prospect, Affine):
        return log_mgf(prospect.base, prospect.scale * t) + prospect.offset * t
    if isinstance(prospect, IndependentSum):
        return math.fsum(log_mgf(term, t) for term in prospect.terms)
    raise TypeError(f"not a prospect: {prospect!r}")


def stats(prospect: Prospect) -> ProspectStats:
    """Exact mean, variance and worst case, composed by independence."""
    if isinstance(prospect, Discrete):
        v = np.asarray(prospect.values)
        m = np.asarray(prospect.masses)
        mean = float(np.dot(m, v))
        variance = float(np.dot(m, (v - mean) ** 2))
        return ProspectStats(mean, variance, prospect.values[0])
    if isinstance(prospect, Gaussian):
        worst = prospect.mean if prospect.variance == 0.0 else -math.inf
        return ProspectStats(prospect.mean, prospect.variance, worst)
    if isinstance(prospect, Affine):
        s = stats(prospect.base)
        k, c = prospect.scale, prospect.offset
        return ProspectStats(s.mean * k + c, s.variance * k * k, s.worst_case * k + c)
    if isinstance(prospect, IndependentSum):
        parts = [stats(term) for term in prospect.terms]
        return ProspectStats(
            math.fsum(p.mean for p in parts),
            math.fsum(p.variance for p in parts),
            sum(p.worst_case for p in parts),
        )
    raise TypeError(f"not a prospect: {prospect!r}")
