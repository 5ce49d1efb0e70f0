"""Diagram-level statistics: death lists, bar classification, percentiles,
moment statistics, and the exact bottleneck distance.

Quantiles use the nearest-rank rule so the 100th percentile is the maximum
exactly. Kurtosis is the non-excess convention (a normal sample tends to 3).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DegenerateInputError, EmptyInputError, InvalidParameterError
from .rips import PersistenceDiagram

__all__ = [
    "BarClassification",
    "PercentileTable",
    "finite_deaths",
    "classify_bars",
    "percentiles",
    "nearest_rank",
    "skewness",
    "kurtosis",
    "bottleneck",
]


@dataclass
class BarClassification:
    """Short/long split of finite death times relative to a reference c_max."""

    c_max: float
    prop_short: float
    prop_long: float


@dataclass
class PercentileTable:
    levels: tuple
    values: tuple


def finite_deaths(diagram: PersistenceDiagram) -> np.ndarray:
    """Degree-0 deaths without the infinite pair; clipped deaths included.

    Order follows the diagram's pair list, which is deterministic for diagrams
    built by this package (ascending death, clipped last).
    """
    return np.array(
        [p.death for p in diagram.pairs if p.dim == 0 and not math.isinf(p.death)]
    )


def classify_bars(deaths, c_max: float) -> BarClassification:
    """A bar is long when its death time is strictly greater than c_max."""
    if not c_max > 0:
        raise InvalidParameterError(f"c_max must be > 0, got {c_max!r}")
    deaths = np.asarray(deaths, dtype=float)
    if deaths.size == 0:
        raise EmptyInputError("cannot classify an empty death list")
    prop_long = float(np.mean(deaths > c_max))
    return BarClassification(float(c_max), 1.0 - prop_long, prop_long)


def nearest_rank(values, level: float) -> float:
    """Nearest-rank quantile: smallest value with at least level% of data <= it."""
    if not 0 < level <= 100:
        raise InvalidParameterError(f"percentile level must be in (0, 100], got {level!r}")
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        raise EmptyInputError("cannot take a percentile of an empty list")
    rank = math.ceil(level / 100.0 * values.size)
    return float(values[rank - 1])


def percentiles(deaths, levels=(95, 99, 100)) -> PercentileTable:
    deaths = np.asarray(deaths, dtype=float)
    if deaths.size == 0:
        raise EmptyInputError("cannot take percentiles of an empty list")
    vals = tuple(nearest_rank(deaths, lv) for lv in levels)
    return PercentileTable(tuple(levels), vals)


def _central_moments(xs):
    xs = np.asarray(xs, dtype=float)
    if xs.size < 3:
        raise DegenerateInputError("need at least 3 values")
    centered = xs - xs.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise DegenerateInputError("zero variance")
    return centered, m2


def skewness(xs) -> float:
    """Sample skewness m3 / m2^(3/2)."""
    centered, m2 = _central_moments(xs)
    return float(np.mean(centered**3) / m2**1.5)


def kurtosis(xs) -> float:
    """Sample kurtosis m4 / m2^2 (non-excess; 3 for a normal population)."""
    centered, m2 = _central_moments(xs)
    return float(np.mean(centered**4) / m2**2)


# ---------------------------------------------------------------------------
# Bottleneck distance
#
# Exact computation: the optimum is attained at one of finitely many candidate
# values (a pairwise L-inf cost or half a persistence), so we binary-search the
# sorted candidate list with a feasibility test at each probe. Unmatched points
# go to the diagonal at cost persistence / 2.
# ---------------------------------------------------------------------------


def _finite_points(diagram, dim):
    return [
        (p.birth, p.death)
        for p in diagram.pairs
        if p.dim == dim and not math.isinf(p.death)
    ]


def bottleneck(a: PersistenceDiagram, b: PersistenceDiagram, dim: int = 0) -> float:
    """Exact bottleneck distance between the degree-`dim` parts of two diagrams.

    Infinite pairs are removed from both sides before matching; clipped pairs
    participate at their clipped death value.
    """
    pa = _finite_points(a, dim)
    pb = _finite_points(b, dim)
    if not pa and not pb:
        return 0.0
    if all(p[0] == 0.0 for p in pa) and all(p[0] == 0.0 for p in pb):
        return _bottleneck_line(
            np.array([p[1] for p in pa]), np.array([p[1] for p in pb])
        )
    return _bottleneck_matching(np.asarray(pa, float), np.asarray(pb, float))


def _one_side_feasible(musts, partners, t):
    # Greedy: must-points ascending each take the smallest unused partner
    # >= x - t; all windows have equal width, so greedy is optimal.
    ptr = 0
    m = len(partners)
    for x in musts:
        lo = x - t
        while ptr < m and partners[ptr] < lo:
            ptr += 1
        if ptr >= m or partners[ptr] > x + t:
            return False
        ptr += 1
    return True


def _line_feasible(xs, ys, t):
    # Points with persistence > 2t must be matched within t; everything else
    # may fall to the diagonal. By Mendelsohn-Dulmage, a matching covering both
    # must-sets exists iff each side can be covered on its own.
    cut = 2.0 * t
    musts_x = xs[bisect_right(xs, cut) :]
    musts_y = ys[bisect_right(ys, cut) :]
    return _one_side_feasible(musts_x, ys, t) and _one_side_feasible(musts_y, xs, t)


def _bottleneck_line(dx, dy) -> float:
    """Fast path for diagrams whose births are all zero (1-d point sets)."""
    xs = np.sort(dx)
    ys = np.sort(dy)
    cands = [np.abs(xs[:, None] - ys[None, :]).ravel()] if xs.size and ys.size else []
    cands.append(xs / 2.0)
    cands.append(ys / 2.0)
    cands.append(np.zeros(1))
    candidates = np.unique(np.concatenate(cands))
    xs_l, ys_l = xs.tolist(), ys.tolist()
    lo, hi = 0, len(candidates) - 1
    # the largest candidate (max persistence/2 bound) is always feasible
    while lo < hi:
        mid = (lo + hi) // 2
        if _line_feasible(xs_l, ys_l, float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def _bottleneck_matching(pa, pb) -> float:
    """General path: feasibility via maximum bipartite matching on the
    diagonal-augmented graph (each side gets one diagonal slot per opposite
    point; slot-to-slot edges are free)."""
    na, nb = len(pa), len(pb)
    size = na + nb
    cost = np.zeros((size, size))
    if na and nb:
        cost[:na, :nb] = np.maximum(
            np.abs(pa[:, 0, None] - pb[None, :, 0]),
            np.abs(pa[:, 1, None] - pb[None, :, 1]),
        )
    diag_a = (pa[:, 1] - pa[:, 0]) / 2.0 if na else np.empty(0)
    diag_b = (pb[:, 1] - pb[:, 0]) / 2.0 if nb else np.empty(0)
    cost[:na, nb:] = diag_a[:, None]
    cost[na:, :nb] = diag_b[None, :]
    candidates = np.unique(cost)
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        feas = cost <= candidates[mid]
        matching = maximum_bipartite_matching(csr_matrix(feas), perm_type="column")
        if int((matching >= 0).sum()) == size:
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])
