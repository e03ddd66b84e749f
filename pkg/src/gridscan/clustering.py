"""Weighted k-means, PSO over centroid sets, and self-adaptive PSO-k-means.

The clustering objective is the average over clusters of the mean weighted
distance of members to their centroid (called SMSE throughout, after the
fitness it plays in the swarm search).  A particle is a full centroid set;
the swarm stage locates a good initial set, and an adaptive second stage
repeatedly runs Lloyd iterations while removing empty clusters, splitting
clusters whose members stray beyond ``eps_d``, and merging centroid pairs
closer than ``eps_c``, so the final cluster count is decided by the data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

KMEANS_MAX_ITER = 300


def validate_weights(w, n_attributes: int | None = None) -> np.ndarray:
    """Check distance weights: finite, non-negative, not all zero."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("distance weights must be a 1-D vector")
    if n_attributes is not None and len(w) != n_attributes:
        raise ValueError(f"expected {n_attributes} weights, got {len(w)}")
    if not np.all(np.isfinite(w)):
        raise ValueError("distance weights must be finite")
    if np.any(w < 0):
        raise ValueError("distance weights must be non-negative")
    if not np.any(w > 0):
        raise ValueError("at least one distance weight must be positive")
    return w


def weighted_distance(x, y, w) -> float:
    """sqrt(sum_d w_d (x_d - y_d)^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != y.shape or x.shape != w.shape:
        raise ValueError(
            f"dimension mismatch: x{x.shape}, y{y.shape}, w{w.shape}"
        )
    return float(np.sqrt(np.sum(w * (x - y) ** 2)))


def centroid_of(points) -> np.ndarray:
    """Arithmetic mean per dimension of a non-empty point list."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("cannot take the centroid of an empty point list")
    return pts.mean(axis=0)


class _WeightedSpace:
    """Dataset scaled by sqrt(weights) so distances reduce to Euclidean.

    ``assign`` uses the norm-expansion identity with a BLAS matmul (fast
    path for swarm fitness and Lloyd sweeps); ``exact_point_dists``
    recomputes the assigned distances term by term for threshold checks
    and reported SMSE values.
    """

    def __init__(self, X: np.ndarray, w: np.ndarray):
        self.X = np.asarray(X, dtype=float)
        self.w = validate_weights(w, self.X.shape[1])
        self.sqrt_w = np.sqrt(self.w)
        self.Xw = self.X * self.sqrt_w
        self.x_sq = np.einsum("ij,ij->i", self.Xw, self.Xw)
        self.lo = self.X.min(axis=0)
        self.hi = self.X.max(axis=0)

    def assign(self, centroids: np.ndarray):
        """Nearest-centroid labels (ties to the lowest index) and distances."""
        Cw = centroids * self.sqrt_w
        d2 = self.x_sq[:, None] - 2.0 * (self.Xw @ Cw.T)
        d2 += np.einsum("ij,ij->i", Cw, Cw)[None, :]
        np.maximum(d2, 0.0, out=d2)
        labels = d2.argmin(axis=1)
        dists = np.sqrt(d2[np.arange(len(labels)), labels])
        return labels, dists

    def exact_point_dists(self, centroids: np.ndarray, labels: np.ndarray) -> np.ndarray:
        diff = self.X - centroids[labels]
        return np.sqrt(np.einsum("ij,j,ij->i", diff, self.w, diff))

    def fitness(self, centroids: np.ndarray) -> float:
        """Empty-cluster-safe SMSE of the partition induced by ``centroids``.

        Empty clusters contribute no term and shrink the averaging count.
        """
        labels, dists = self.assign(centroids)
        return _mean_cluster_distance(labels, dists, centroids.shape[0])


def _mean_cluster_distance(labels, dists, k: int) -> float:
    counts = np.bincount(labels, minlength=k)
    sums = np.bincount(labels, weights=dists, minlength=k)
    occupied = counts > 0
    return float(np.mean(sums[occupied] / counts[occupied]))


@dataclass
class ClusterModel:
    """A centroid set with the partition it induces.

    ``assignment[i]`` is the index of the weighted-distance-nearest
    centroid of point i (ties broken toward the lowest index).  ``smse``
    is the average over non-empty clusters of the mean member distance;
    for repaired final models ``empty_clusters`` is empty and the strict
    recomputation matches within 1e-9.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    weights: np.ndarray
    smse: float
    k: int
    empty_clusters: tuple[int, ...] = ()
    converged: bool = True
    eps_d: float | None = None
    eps_c: float | None = None
    smse_history: list[float] = field(default_factory=list, repr=False)
    objective_history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "smse": self.smse,
            "converged": self.converged,
            "eps_d": self.eps_d,
            "eps_c": self.eps_c,
            "weights": [float(v) for v in self.weights],
            "centroids": [[float(v) for v in row] for row in self.centroids],
            "assignment": [int(v) for v in self.assignment],
        }

    def save_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    def save_assignment_csv(self, path, hours=None) -> Path:
        path = Path(path)
        if hours is None:
            hours = np.arange(len(self.assignment))
        lines = ["hour,cluster_id"]
        lines += [f"{int(h)},{int(c)}" for h, c in zip(hours, self.assignment)]
        path.write_text("\n".join(lines) + "\n")
        return path


def smse(model: ClusterModel, X) -> float:
    """Strict SMSE recomputation from a model's assignment and centroids.

    Raises on empty clusters; repair (or drop) them first.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(model.assignment)
    k = model.centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0)
        raise ValueError(f"empty cluster(s) {empty.tolist()}: repair before computing SMSE")
    diff = X - model.centroids[labels]
    dists = np.sqrt(np.einsum("ij,j,ij->i", diff, np.asarray(model.weights, float), diff))
    sums = np.bincount(labels, weights=dists, minlength=k)
    return float(np.mean(sums / counts))


def _cluster_means(X: np.ndarray, labels: np.ndarray, old_centroids: np.ndarray) -> np.ndarray:
    """Per-cluster means; a cluster with no members keeps its old centroid."""
    k = old_centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    means = old_centroids.copy()
    occupied = counts > 0
    sums = np.empty((k, X.shape[1]))
    for a in range(X.shape[1]):
        sums[:, a] = np.bincount(labels, weights=X[:, a], minlength=k)
    means[occupied] = sums[occupied] / counts[occupied, None]
    return means


def kmeans(X, initial_centroids, w, max_iter: int = KMEANS_MAX_ITER) -> ClusterModel:
    """Lloyd iterations under weighted distance from given initial centroids.

    Runs until the assignment reaches a fixed point or ``max_iter``
    sweeps.  Clusters that end up with no members are reported in
    ``empty_clusters`` (their centroids stay where they last were), never
    silently dropped.  ``smse_history[0]`` is the SMSE of the initial
    assignment; one entry is appended per sweep.  ``objective_history``
    tracks the total squared weighted distance, the quantity each Lloyd
    sweep provably decreases (the unsquared SMSE can tick up slightly
    while the squared objective descends).
    """
    X = np.asarray(X, dtype=float)
    C = np.array(initial_centroids, dtype=float)
    if C.ndim != 2 or C.shape[1] != X.shape[1]:
        raise ValueError("initial centroids must be a (k, n_attributes) matrix")
    k = C.shape[0]
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"need 1 <= k <= {X.shape[0]}, got k={k}")
    if len(np.unique(C, axis=0)) != k:
        raise ValueError("initial centroids must be distinct")
    space = _WeightedSpace(X, w)

    labels, dists = space.assign(C)
    history = [_mean_cluster_distance(labels, dists, k)]
    objective = [float(np.sum(dists**2))]
    converged = False
    for _ in range(max_iter):
        C = _cluster_means(X, labels, C)
        new_labels, dists = space.assign(C)
        history.append(_mean_cluster_distance(new_labels, dists, k))
        objective.append(float(np.sum(dists**2)))
        if np.array_equal(new_labels, labels):
            converged = True
            labels = new_labels
            break
        labels = new_labels

    counts = np.bincount(labels, minlength=k)
    empty = tuple(int(i) for i in np.flatnonzero(counts == 0))
    exact = space.exact_point_dists(C, labels)
    return ClusterModel(
        centroids=C,
        assignment=labels,
        weights=space.w,
        smse=_mean_cluster_distance(labels, exact, k),
        k=k,
        empty_clusters=empty,
        converged=converged,
        smse_history=history,
        objective_history=objective,
    )


def init_centroids_random(X, k: int, rng: np.random.Generator) -> np.ndarray:
    """k distinct data points drawn uniformly at random."""
    X = np.asarray(X, dtype=float)
    distinct = np.unique(X, axis=0)
    if k > len(distinct):
        raise ValueError(f"only {len(distinct)} distinct points, cannot seed k={k}")
    order = rng.permutation(len(X))
    chosen: list[np.ndarray] = []
    seen = set()
    for idx in order:
        key = X[idx].tobytes()
        if key in seen:
            continue
        seen.add(key)
        chosen.append(X[idx])
        if len(chosen) == k:
            break
    return np.array(chosen)


@dataclass(frozen=True)
class PsoParams:
    """Swarm-stage knobs; the inertia factor decays linearly w_max -> w_min."""

    swarm_size: int = 20
    n_iter: int = 50
    c1: float = 1.49445
    c2: float = 1.49445
    w_max: float = 0.9
    w_min: float = 0.4
    sigma_t2: float = 1e-3
    p0: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if not (self.w_max >= self.w_min > 0):
            raise ValueError("need w_max >= w_min > 0")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must lie in [0, 1]")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")


@dataclass
class Particle:
    position: np.ndarray           # (k, n_attributes) centroid set
    velocity: np.ndarray
    best_position: np.ndarray
    best_fitness: float
    fitness: float


@dataclass
class Swarm:
    particles: list[Particle]
    g_best_position: np.ndarray
    g_best_fitness: float


def inertia_weight(iter_index: int, params: PsoParams) -> float:
    return params.w_max - iter_index * (params.w_max - params.w_min) / params.n_iter


def velocity_position_update(
    position, velocity, p_best, g_best, inertia, c1, c2, rand1, rand2, lo, hi
):
    """One particle's velocity and position update, clamped to the box.

    ``rand1``/``rand2`` are scalars in [0, 1], drawn fresh per particle
    per update.  The position repair is a coordinate-wise clamp of each
    centroid to the data bounding box.
    """
    new_v = (
        inertia * velocity
        + c1 * rand1 * (p_best - position)
        + c2 * rand2 * (g_best - position)
    )
    new_p = np.clip(position + new_v, lo, hi)
    return new_p, new_v


def init_swarm(space: _WeightedSpace, k: int, params: PsoParams, rng: np.random.Generator) -> Swarm:
    """Particles seeded at random distinct data points, small random velocity."""
    span = space.hi - space.lo
    particles = []
    for _ in range(params.swarm_size):
        position = init_centroids_random(space.X, k, rng)
        velocity = rng.uniform(-0.1, 0.1, size=position.shape) * span
        fitness = space.fitness(position)
        particles.append(
            Particle(
                position=position,
                velocity=velocity,
                best_position=position.copy(),
                best_fitness=fitness,
                fitness=fitness,
            )
        )
    best = min(particles, key=lambda p: p.best_fitness)
    return Swarm(
        particles=particles,
        g_best_position=best.best_position.copy(),
        g_best_fitness=best.best_fitness,
    )


def pso_step(swarm: Swarm, space: _WeightedSpace, params: PsoParams, iter_index: int,
             rng: np.random.Generator) -> Swarm:
    """One swarm iteration: move every particle, then reduce the global best."""
    inertia = inertia_weight(iter_index, params)
    for p in swarm.particles:
        rand1, rand2 = rng.uniform(size=2)
        p.position, p.velocity = velocity_position_update(
            p.position, p.velocity, p.best_position, swarm.g_best_position,
            inertia, params.c1, params.c2, rand1, rand2, space.lo, space.hi,
        )
        p.fitness = space.fitness(p.position)
        if p.fitness < p.best_fitness:
            p.best_fitness = p.fitness
            p.best_position = p.position.copy()
    best = min(swarm.particles, key=lambda p: p.best_fitness)
    if best.best_fitness < swarm.g_best_fitness:
        swarm.g_best_fitness = best.best_fitness
        swarm.g_best_position = best.best_position.copy()
    return swarm


def swarm_fitness_variance(fitnesses) -> float:
    """Normalized fitness variance used as the premature-convergence signal."""
    J = np.asarray(fitnesses, dtype=float)
    centered = J - J.mean()
    F = max(1.0, float(np.abs(centered).max()))
    return float(np.mean((centered / F) ** 2))


def mutation_check(swarm: Swarm, space: _WeightedSpace, params: PsoParams,
                   rng: np.random.Generator) -> tuple[float, bool]:
    """Mutate the global best when the swarm has collapsed.

    When the normalized fitness variance falls below ``sigma_t2`` the
    mutation probability is ``p0`` (else 0).  A triggered mutation scales
    every coordinate of the global best by (1 + eta/2) with per-coordinate
    standard-normal eta, clamps to the box, and keeps the better of the
    original and the mutant.

    Returns (mutation probability, whether the mutant was adopted).
    """
    sigma_f2 = swarm_fitness_variance([p.fitness for p in swarm.particles])
    p_m = params.p0 if sigma_f2 < params.sigma_t2 else 0.0
    if p_m <= rng.uniform():
        return p_m, False
    eta = rng.standard_normal(swarm.g_best_position.shape)
    mutant = np.clip(swarm.g_best_position * (1.0 + eta / 2.0), space.lo, space.hi)
    mutant_fitness = space.fitness(mutant)
    if mutant_fitness < swarm.g_best_fitness:
        swarm.g_best_position = mutant
        swarm.g_best_fitness = mutant_fitness
        return p_m, True
    return p_m, False


SPLIT_QUANTILE = 0.999


@dataclass(frozen=True)
class AdaptiveParams:
    """Second-stage knobs deciding the cluster count.

    ``eps_d`` caps how far a member may sit from its centroid before the
    cluster is split; ``eps_c`` is the minimum distance two centroids may
    keep before being merged.  ``k_init=None`` defaults to
    ceil(sqrt(n/2)).  ``eps_d=None`` resolves, once the seeded clustering
    exists, to the 99.9th percentile of its point-to-centroid distances
    (so the split rule always trims the extreme tail, whatever scale the
    distance weights set); ``eps_c=None`` resolves to eps_d/10.
    """

    k_init: int | None = None
    eps_d: float | None = None
    eps_c: float | None = None
    max_outer: int = 60

    def __post_init__(self):
        if self.eps_d is not None and self.eps_d <= 0:
            raise ValueError("eps_d must be positive")
        if self.eps_c is not None:
            if self.eps_d is None:
                raise ValueError("eps_c without eps_d is ambiguous")
            if not (self.eps_d > self.eps_c > 0):
                raise ValueError("need eps_d > eps_c > 0")
        if self.k_init is not None and self.k_init < 1:
            raise ValueError("k_init must be >= 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


def default_k_init(n_points: int) -> int:
    return max(1, math.ceil(math.sqrt(n_points / 2.0)))


def _drop_empty(centroids, labels):
    counts = np.bincount(labels, minlength=centroids.shape[0])
    keep = np.flatnonzero(counts > 0)
    remap = np.full(centroids.shape[0], -1)
    remap[keep] = np.arange(len(keep))
    return centroids[keep], remap[labels]


def _merge_close(centroids, labels, eps_c, sqrt_w=None):
    """Merge centroid pairs closer than eps_c (weighted metric), nearest
    pair first.

    Each merge replaces the pair by its member-weighted mean; distances
    and member counts are recomputed before looking for the next pair.
    """
    centroids = centroids.copy()
    if sqrt_w is None:
        sqrt_w = np.ones(centroids.shape[1])
    counts = np.bincount(labels, minlength=centroids.shape[0]).astype(float)
    merged = False
    while centroids.shape[0] > 1:
        D = cdist(centroids * sqrt_w, centroids * sqrt_w)
        np.fill_diagonal(D, np.inf)
        i, j = np.unravel_index(np.argmin(D), D.shape)
        if D[i, j] >= eps_c:
            break
        total = counts[i] + counts[j]
        if total > 0:
            merged_centroid = (counts[i] * centroids[i] + counts[j] * centroids[j]) / total
        else:
            merged_centroid = (centroids[i] + centroids[j]) / 2.0
        keep = [idx for idx in range(centroids.shape[0]) if idx != j]
        centroids[i] = merged_centroid
        counts[i] = total
        centroids = centroids[keep]
        counts = counts[keep]
        merged = True
    return centroids, merged


def self_adaptive_pso_kmeans(
    X,
    w,
    pso: PsoParams = PsoParams(),
    adapt: AdaptiveParams = AdaptiveParams(),
) -> ClusterModel:
    """Two-stage clustering with a data-driven cluster count.

    Stage 1 runs the swarm over centroid sets of size ``k_init`` (particles
    start at random distinct data points) with the premature-convergence
    mutation active.  Stage 2 seeds Lloyd iterations with the global best
    and then alternates k-means with structural repairs: empty clusters
    are removed, the farthest point beyond ``eps_d`` from its centroid
    spawns a new cluster (one per outer pass), and centroid pairs within
    ``eps_c`` are merged.  The loop ends when a pass changes nothing
    structurally and the assignment is a fixed point; if ``max_outer``
    passes are exhausted first, the best model seen is returned flagged
    ``converged=False``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    space = _WeightedSpace(X, w)
    k_init = adapt.k_init if adapt.k_init is not None else default_k_init(n)
    if k_init > n:
        raise ValueError(f"k_init={k_init} exceeds the number of points {n}")

    rng = np.random.default_rng(pso.seed)
    swarm = init_swarm(space, k_init, params=pso, rng=rng)
    for it in range(pso.n_iter):
        pso_step(swarm, space, pso, it, rng)
        mutation_check(swarm, space, pso, rng)

    centroids = np.unique(swarm.g_best_position, axis=0)
    best: ClusterModel | None = None
    history: list[float] = []
    eps_d, eps_c = adapt.eps_d, adapt.eps_c
    for _ in range(adapt.max_outer):
        model = kmeans(X, centroids, space.w)
        history.extend(model.smse_history)
        centroids, labels = _drop_empty(model.centroids, model.assignment)
        structural = bool(model.empty_clusters)

        exact = space.exact_point_dists(centroids, labels)
        if eps_d is None:
            eps_d = max(float(np.quantile(exact, SPLIT_QUANTILE)), 1e-12)
        if eps_c is None:
            eps_c = eps_d / 10.0
        candidate = ClusterModel(
            centroids=centroids,
            assignment=labels,
            weights=space.w,
            smse=_mean_cluster_distance(labels, exact, centroids.shape[0]),
            k=centroids.shape[0],
            converged=True,
            eps_d=eps_d,
            eps_c=eps_c,
            smse_history=list(history),
        )
        if best is None or candidate.smse < best.smse:
            best = candidate

        violating = exact > eps_d
        if np.any(violating):
            farthest = int(np.argmax(np.where(violating, exact, -np.inf)))
            centroids = np.vstack([centroids, X[farthest]])
            structural = True

        centroids, did_merge = _merge_close(centroids, labels, eps_c, space.sqrt_w)
        structural = structural or did_merge

        if not structural and model.converged:
            return candidate

    assert best is not None
    best.converged = False
    return best
