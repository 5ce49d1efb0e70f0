"""Seeded point-cloud samplers and the additive noise model.

All randomness goes through numpy's PCG64 generator (``np.random.default_rng``)
with explicit 64-bit seeds, so every sampler is a pure function of its
parameters: identical inputs give bit-identical clouds. Sub-streams are derived
with ``np.random.SeedSequence.spawn`` where a routine needs more than one.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "CloudMeta",
    "PointCloud",
    "sample_circle",
    "sample_two_concentric",
    "sample_two_distinct",
    "sample_sphere",
    "sample_torus3",
    "add_noise",
    "write_cloud",
    "read_cloud",
]

NOISE_COORD_STD = 1.0 / 3.0  # additive noise is isotropic N(0, I/9)


@dataclass
class CloudMeta:
    shape: str
    n: int
    seed: int
    params: dict = field(default_factory=dict)
    noise_fraction: float = 0.0


@dataclass
class PointCloud:
    """Finite set of points in R^d plus the provenance needed to regenerate it."""

    points: np.ndarray  # (n, d) float64
    meta: CloudMeta

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise InvalidParameterError("point array must be (n, d) with n >= 1")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _check_count(name, value):
    if int(value) != value or value < 1:
        raise InvalidParameterError(f"{name} must be a positive integer, got {value!r}")


def _check_positive(name, value):
    if not value > 0:
        raise InvalidParameterError(f"{name} must be > 0, got {value!r}")


def _circle_points(rng, n, r, center=(0.0, 0.0)):
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.column_stack((r * np.cos(angles), r * np.sin(angles)))
    pts += np.asarray(center, dtype=np.float64)
    return pts


def sample_circle(n: int, r: float = 1.0, seed: int = 0) -> PointCloud:
    """n points on the circle of radius r, angles i.i.d. uniform on [0, 2pi).

    The angle stream depends only on (n, seed), so two calls with the same seed
    and different radii produce one cloud that is an exact scaling of the other.
    """
    _check_count("n", n)
    _check_positive("r", r)
    rng = np.random.default_rng(seed)
    pts = _circle_points(rng, n, float(r))
    meta = CloudMeta(shape="circle", n=n, seed=seed, params={"r": float(r)})
    return PointCloud(pts, meta)


def sample_two_concentric(
    n_outer: int,
    n_inner: int,
    d_outer: float = 4.0,
    d_inner: float = 2.0,
    seed: int = 0,
) -> PointCloud:
    """Two origin-centered circles given by their diameters, outer points first."""
    _check_count("n_outer", n_outer)
    _check_count("n_inner", n_inner)
    if not (d_outer > d_inner > 0):
        raise InvalidParameterError(
            f"need d_outer > d_inner > 0, got {d_outer!r}, {d_inner!r}"
        )
    ss_outer, ss_inner = np.random.SeedSequence(seed).spawn(2)
    outer = _circle_points(np.random.default_rng(ss_outer), n_outer, d_outer / 2.0)
    inner = _circle_points(np.random.default_rng(ss_inner), n_inner, d_inner / 2.0)
    meta = CloudMeta(
        shape="two_concentric",
        n=n_outer + n_inner,
        seed=seed,
        params={
            "n_outer": n_outer,
            "n_inner": n_inner,
            "d_outer": float(d_outer),
            "d_inner": float(d_inner),
        },
    )
    return PointCloud(np.vstack((outer, inner)), meta)


def sample_two_distinct(
    n_each: int, r: float = 0.3, gap: float = 0.6, seed: int = 0
) -> PointCloud:
    """Two radius-r circles whose closest points are `gap` apart.

    Centers sit at (0, 0) and (2r + gap, 0), so the minimum distance between
    the two circle curves is exactly `gap`.
    """
    _check_count("n_each", n_each)
    _check_positive("r", r)
    _check_positive("gap", gap)
    ss_left, ss_right = np.random.SeedSequence(seed).spawn(2)
    left = _circle_points(np.random.default_rng(ss_left), n_each, float(r))
    right = _circle_points(
        np.random.default_rng(ss_right), n_each, float(r), center=(2.0 * r + gap, 0.0)
    )
    meta = CloudMeta(
        shape="two_distinct",
        n=2 * n_each,
        seed=seed,
        params={"n_each": n_each, "r": float(r), "gap": float(gap)},
    )
    return PointCloud(np.vstack((left, right)), meta)


def sample_sphere(n: int, r: float = 1.0, seed: int = 0) -> PointCloud:
    """n points uniform on the radius-r sphere in R^3 (normalized Gaussians)."""
    _check_count("n", n)
    _check_positive("r", r)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, 3))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # Resample the (measure-zero) chance of an all-zero Gaussian triple.
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    pts = float(r) * g / norms
    meta = CloudMeta(shape="sphere", n=n, seed=seed, params={"r": float(r)})
    return PointCloud(pts, meta)


def sample_torus3(n: int, seed: int = 0) -> PointCloud:
    """n points on the flat 3-torus embedded in R^6 as three unit circles.

    Each point is (cos t1, sin t1, cos t2, sin t2, cos t3, sin t3) with the
    three angles i.i.d. uniform on [0, 2pi). Uniform angles are uniform with
    respect to the flat torus's Riemannian metric, which is the induced metric
    of this embedding.
    """
    _check_count("n", n)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(n, 3))
    pts = np.empty((n, 6))
    pts[:, 0::2] = np.cos(angles)
    pts[:, 1::2] = np.sin(angles)
    meta = CloudMeta(shape="torus3", n=n, seed=seed, params={})
    return PointCloud(pts, meta)


def add_noise(cloud: PointCloud, fraction: float, seed: int = 0) -> PointCloud:
    """Add N(0, I/9) noise to a uniformly chosen subset of round(fraction * n) points.

    The subset is drawn without replacement; untouched points are returned
    bit-identical. `fraction` is recorded in the output meta.
    """
    if not (0.0 <= fraction <= 1.0):
        raise InvalidParameterError(f"noise fraction must be in [0, 1], got {fraction!r}")
    n = cloud.n
    k = int(round(fraction * n))
    pts = cloud.points.copy()
    if k > 0:
        ss_pick, ss_noise = np.random.SeedSequence(seed).spawn(2)
        idx = np.random.default_rng(ss_pick).choice(n, size=k, replace=False)
        noise = np.random.default_rng(ss_noise).normal(
            0.0, NOISE_COORD_STD, size=(k, cloud.dim)
        )
        pts[idx] += noise
    meta = CloudMeta(
        shape=cloud.meta.shape,
        n=n,
        seed=cloud.meta.seed,
        params=dict(cloud.meta.params),
        noise_fraction=float(fraction),
    )
    return PointCloud(pts, meta)


def write_cloud(cloud: PointCloud, csv_path, meta_path=None) -> None:
    """CSV with one point per row (header x0..x{d-1}) plus a JSON meta envelope."""
    csv_path = Path(csv_path)
    if meta_path is None:
        meta_path = csv_path.with_suffix(".meta.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(cloud.dim)])
        for row in cloud.points:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "shape": cloud.meta.shape,
        "n": cloud.meta.n,
        "seed": cloud.meta.seed,
        "params": cloud.meta.params,
        "noise_fraction": cloud.meta.noise_fraction,
        "dim": cloud.dim,
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_cloud(csv_path, meta_path=None) -> PointCloud:
    csv_path = Path(csv_path)
    if meta_path is None:
        meta_path = csv_path.with_suffix(".meta.json")
    pts = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if Path(meta_path).exists():
        with open(meta_path) as fh:
            raw = json.load(fh)
        meta = CloudMeta(
            shape=raw["shape"],
            n=raw["n"],
            seed=raw["seed"],
            params=raw.get("params", {}),
            noise_fraction=raw.get("noise_fraction", 0.0),
        )
    else:
        meta = CloudMeta(shape="unknown", n=pts.shape[0], seed=-1)
    return PointCloud(pts, meta)
