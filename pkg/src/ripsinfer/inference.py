"""Replication-based inference on component death times.

The scheme mirrors a percentile bootstrap: draw many replicated death lists
from a fitted model, compare the observed j-th largest death against the same
statistic over the replications. p-values are one-sided with a ">=" comparison,
so p = 0 is attainable with finitely many replications; confidence intervals
are one-sided [0, q95] with q95 the nearest-rank 95th percentile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import kolmogorov

from . import diagrams, distfit, rips
from .errors import EmptyInputError, InvalidParameterError

__all__ = [
    "InferenceReport",
    "SignalCount",
    "GoodnessRecord",
    "GoodnessReport",
    "replicate_diagrams",
    "order_statistic",
    "test_order_statistic",
    "count_signals",
    "ks_two_sample",
    "goodness_suite",
    "fit_support",
]

DEFAULT_ALPHA = 0.05


@dataclass
class InferenceReport:
    j: int
    observed: float
    ci_upper: float
    p_value: float
    n_reps: int
    alpha: float = DEFAULT_ALPHA

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


@dataclass
class SignalCount:
    """Number of significant connected components, the essential one included."""

    n_components: int
    reports: list[InferenceReport] = field(default_factory=list)


def replicate_diagrams(
    dist: distfit.FittedDistribution, n_points: int, n_reps: int, seed: int = 0
) -> np.ndarray:
    """n_reps independent simulated death lists of n_points draws each."""
    if n_points < 1 or n_reps < 1:
        raise InvalidParameterError("n_points and n_reps must be >= 1")
    draws = distfit.sample(dist, n_points * n_reps, seed=seed)
    return draws.reshape(n_reps, n_points)


def order_statistic(deaths, j: int) -> float:
    """j-th largest value; j = 1 is the maximum."""
    deaths = np.asarray(deaths, dtype=float)
    if not 1 <= j <= deaths.size:
        raise IndexError(f"j must be in [1, {deaths.size}], got {j}")
    return float(np.partition(deaths, deaths.size - j)[deaths.size - j])


def test_order_statistic(
    observed, sims, j: int, alpha: float = DEFAULT_ALPHA
) -> InferenceReport:
    """One-sided replication test of the observed j-th largest death.

    p = fraction of simulated lists whose j-th largest is at least the observed
    one; the CI upper bound is the 95th percentile of the simulated statistic.
    """
    sims = np.asarray(sims, dtype=float)
    if sims.ndim == 1:
        sims = sims.reshape(1, -1)
    if sims.size == 0:
        raise EmptyInputError("no simulated diagrams supplied")
    obs = order_statistic(observed, j)
    if not 1 <= j <= sims.shape[1]:
        raise IndexError(f"j={j} exceeds simulated diagram size {sims.shape[1]}")
    sim_stat = np.partition(sims, sims.shape[1] - j, axis=1)[:, sims.shape[1] - j]
    p_value = float(np.mean(sim_stat >= obs))
    ci_upper = diagrams.nearest_rank(sim_stat, 95)
    return InferenceReport(j, obs, ci_upper, p_value, sims.shape[0], alpha)


def count_signals(
    observed,
    dist: distfit.FittedDistribution,
    n_reps: int = 1000,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    max_j: int | None = None,
) -> SignalCount:
    """Test T_1, T_2, ... until the first insignificant statistic.

    The count adds one for the essential component, so it is always >= 1.
    """
    observed = np.asarray(observed, dtype=float)
    if observed.size == 0:
        return SignalCount(1, [])
    sims = replicate_diagrams(dist, observed.size, n_reps, seed=seed)
    limit = observed.size if max_j is None else min(max_j, observed.size)
    reports = []
    significant = 0
    for j in range(1, limit + 1):
        report = test_order_statistic(observed, sims, j, alpha=alpha)
        reports.append(report)
        if not report.significant:
            break
        significant += 1
    return SignalCount(significant + 1, reports)


def ks_two_sample(xs, ys) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The statistic is the sup gap between the two empirical CDFs; the p-value
    evaluates the Kolmogorov distribution at sqrt(n m / (n + m)) * statistic.
    """
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise EmptyInputError("both samples must be nonempty")
    grid = np.concatenate([xs, ys])
    f_x = np.searchsorted(xs, grid, side="right") / xs.size
    f_y = np.searchsorted(ys, grid, side="right") / ys.size
    statistic = float(np.max(np.abs(f_x - f_y)))
    n_eff = xs.size * ys.size / (xs.size + ys.size)
    p_value = float(min(1.0, kolmogorov(math.sqrt(n_eff) * statistic)))
    return statistic, p_value


@dataclass
class GoodnessRecord:
    index: int
    family: str
    params: tuple
    skew_real: float
    kurt_real: float
    skew_sim: float
    kurt_sim: float
    bottleneck_distance: float


@dataclass
class GoodnessReport:
    records: list[GoodnessRecord]

    @property
    def family_counts(self) -> dict:
        counts: dict = {}
        for rec in self.records:
            counts[rec.family] = counts.get(rec.family, 0) + 1
        return counts

    @property
    def bottlenecks(self) -> np.ndarray:
        return np.array([r.bottleneck_distance for r in self.records])


def fit_support(deaths, maxscale: float) -> float:
    """Beta support: raw [0, 1] while the data allows it, else [0, maxscale]."""
    return 1.0 if float(np.max(deaths)) < 1.0 else float(maxscale)


def goodness_suite(
    make_cloud: Callable[[int], "object"],
    maxscale: float | None,
    n_collections: int,
    seed: int = 0,
) -> GoodnessReport:
    """Replicated goodness-of-fit study over independently sampled collections.

    Each collection samples a fresh cloud, computes its degree-0 diagram, fits
    the best model, simulates one diagram of n-1 draws from it, and records the
    chosen family, moment statistics of both death lists, and the bottleneck
    distance between real and simulated diagrams. ``maxscale=None`` picks the
    scale per collection with the geometric-grid rule.
    """
    if n_collections < 2:
        raise InvalidParameterError("need at least 2 collections")
    children = np.random.SeedSequence(seed).spawn(n_collections)
    records = []
    for idx, child in enumerate(children):
        cloud_seed, sim_seed = (int(s) for s in child.generate_state(2, dtype=np.uint64))
        cloud = make_cloud(cloud_seed)
        dmat = rips.pairwise_distances(cloud)
        scale = rips.optimal_maxscale(dmat) if maxscale is None else float(maxscale)
        diagram = rips.h0_persistence(dmat, scale)
        deaths = diagrams.finite_deaths(diagram)
        model = distfit.select_best(deaths, support=fit_support(deaths, scale))
        sim_deaths = distfit.sample(model, deaths.size, seed=sim_seed)
        dist_bn = diagrams.bottleneck(
            diagram, rips.diagram_from_deaths(sim_deaths, scale), dim=0
        )
        records.append(
            GoodnessRecord(
                index=idx,
                family=model.family,
                params=model.params,
                skew_real=diagrams.skewness(deaths),
                kurt_real=diagrams.kurtosis(deaths),
                skew_sim=diagrams.skewness(sim_deaths),
                kurt_sim=diagrams.kurtosis(sim_deaths),
                bottleneck_distance=dist_bn,
            )
        )
    return GoodnessReport(records)
