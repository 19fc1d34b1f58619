from dataclasses import dataclass
import logging

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class WeightedDigraph:
    """Dense weighted directed graph.

    Row ``i`` column ``j`` of ``weights`` is the weight of the edge
    ``i -> j``. Weights lie in ``[0, 1]`` and the diagonal is zero.
    """

    weights: np.ndarray

    def __post_init__(self):
        weights = _frozen(self.weights)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValueError(f"weights must be a square matrix, got {weights.shape}")
        if weights.shape[0] < 1:
            raise ValueError("graph needs at least one node")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if weights.min() < 0.0 or weights.max() > 1.0:
            raise ValueError("weights must lie in [0, 1]")
        if np.any(np.diag(weights) != 0.0):
            raise ValueError("self-loops are not allowed (nonzero diagonal)")
        object.__setattr__(self, "weights", weights)

    @property
    def n(self):
        return self.weights.shape[0]

    def entry_sum(self):
        return float(self.weights.sum())


@dataclass(frozen=True)
class BinarySupport:
    a: np.ndarray
    h: int


@dataclass(frozen=True)
class Partition:
    """Disjoint clusters of node indices with optional exemplars.

    ``clusters`` is a tuple of sorted index tuples; ``exemplars``, when
    present, holds one member of each cluster in the same order.
    """

    clusters: tuple
    exemplars: tuple = None

    def __post_init__(self):
        clusters = tuple(tuple(sorted(int(i) for i in members)) for members in self.clusters)
        if any(len(members) == 0 for members in clusters):
            raise ValueError("clusters must be nonempty")
        flat = [i for members in clusters for i in members]
        if len(flat) != len(set(flat)):
            raise ValueError("clusters must be pairwise disjoint")
        object.__setattr__(self, "clusters", clusters)
        if self.exemplars is not None:
            exemplars = tuple(int(e) for e in self.exemplars)
            if len(exemplars) != len(clusters):
                raise ValueError("need exactly one exemplar per cluster")
            for exemplar, members in zip(exemplars, clusters):
                if exemplar not in members:
                    raise ValueError(f"exemplar {exemplar} is not in its cluster")
            object.__setattr__(self, "exemplars", exemplars)

    def __len__(self):
        return len(self.clusters)

    def covers(self, n):
        return sorted(i for members in self.clusters for i in members) == list(range(n))

    def labels(self, n=None):
        """Cluster id of every node, ids following cluster order."""
        if n is None:
            n = sum(len(members) for members in self.clusters)
        labels = np.full(n, -1, dtype=np.int64)
        for cluster_id, members in enumerate(self.clusters):
            labels[list(members)] = cluster_id
        return labels


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError(f"points must be an (n, D) array, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def _check_k(k, n):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of nodes n={n}")
    return int(k)


def knn_indices(distances, k):
    """Indices of the k nearest neighbors of every row.

    The diagonal is excluded. Ties in distance go to the smaller index.

    Parameters
    ----------
    distances : np.ndarray
        Square matrix of pairwise distances.
    k : int
        Number of neighbors per row.

    Returns
    -------
    np.ndarray
        Integer array of shape (n, k), nearest first.
    """
    distances = np.array(distances, dtype=np.float64)
    n = distances.shape[0]
    k = _check_k(k, n)
    np.fill_diagonal(distances, np.inf)
    order = np.argsort(distances, axis=1, kind="stable")
    return order[:, :k]


def periodic_distances(positions, box_size):
    """Pairwise distances on a periodic box under the minimum-image convention.

    Coordinates outside ``[0, box_size)`` are taken modulo the box.
    """
    positions = np.asarray(positions, dtype=np.float64)
    delta = np.mod(positions[:, None, :] - positions[None, :, :], box_size)
    delta = np.minimum(delta, box_size - delta)
    return np.sqrt((delta ** 2).sum(axis=-1))


def _as_point_set(points):
    if isinstance(points, PointSet):
        return points
    return PointSet(points)


def knn_graph(points, k, bandwidth_scale=1.0):
    """Directed K-NN graph of point data with Gaussian edge weights.

    Every node points to its ``k`` nearest neighbors (Euclidean). An edge
    ``i -> j`` carries ``exp(-d(i, j)^2 / sigma^2)`` where ``sigma^2`` is
    ``bandwidth_scale`` times the mean squared length of all kept edges.

    Parameters
    ----------
    points : PointSet or array_like
        Points of shape (n, D).
    k : int
        Out-degree of every node, ``1 <= k <= n - 1``.
    bandwidth_scale : float
        Multiplier of the mean squared edge length.

    Returns
    -------
    WeightedDigraph
        Graph whose rows each hold exactly ``k`` nonzero weights in (0, 1].
    """
    if bandwidth_scale <= 0:
        raise ValueError(f"bandwidth_scale must be positive, got {bandwidth_scale}")
    point_set = _as_point_set(points)
    n = point_set.n
    k = _check_k(k, n)
    distances = cdist(point_set.points, point_set.points)
    neighbors = knn_indices(distances, k)
    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    sq = distances[rows, cols] ** 2
    sigma2 = bandwidth_scale * sq.mean()
    if sigma2 > 0:
        values = np.exp(-sq / sigma2)
    else:
        values = np.ones_like(sq)
    # far outliers would underflow to zero and drop out of the support
    values = np.maximum(values, np.finfo(np.float64).tiny)
    weights = np.zeros((n, n))
    weights[rows, cols] = values
    logger.debug("knn_graph n=%d k=%d sigma2=%g", n, k, sigma2)
    return WeightedDigraph(weights)


def motion_knn_graph(positions, velocities, k, box_size=None):
    """Velocity-correlation K-NN graph of moving individuals.

    ``w(i, j) = max(cos(angle(v_i, v_j)), 0)`` for the ``k`` spatially
    nearest neighbors ``j`` of ``i``, zero otherwise. Distances use the
    minimum-image convention when ``box_size`` is given.
    """
    positions = np.asarray(positions, dtype=np.float64)
    velocities = np.asarray(velocities, dtype=np.float64)
    if positions.shape != velocities.shape or positions.ndim != 2:
        raise ValueError(
            "positions and velocities must be (n, d) arrays of the same shape, "
            f"got {positions.shape} and {velocities.shape}"
        )
    n = positions.shape[0]
    k = _check_k(k, n)
    speeds = np.linalg.norm(velocities, axis=1)
    if np.any(speeds == 0):
        raise ValueError("every velocity must be nonzero")
    if box_size is None:
        distances = cdist(positions, positions)
    else:
        distances = periodic_distances(positions, box_size)
    neighbors = knn_indices(distances, k)
    unit = velocities / speeds[:, None]
    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    cosine = np.einsum("ij,ij->i", unit[rows], unit[cols])
    weights = np.zeros((n, n))
    weights[rows, cols] = np.clip(cosine, 0.0, 1.0)
    return WeightedDigraph(weights)


def velocity_knn_graph(state, k):
    """Velocity K-NN graph of a particle state on its periodic box."""
    return motion_knn_graph(
        state.positions, state.velocities(), k, box_size=state.box_size
    )


def binary_support(g):
    a = (g.weights > 0).astype(np.int64)
    h = int(a.sum(axis=1).max()) if g.n > 0 else 0
    a.flags.writeable = False
    return BinarySupport(a=a, h=h)


def subgraph(g, nodes):
    nodes = np.asarray(nodes, dtype=np.int64)
    return WeightedDigraph(g.weights[np.ix_(nodes, nodes)])


def knn_subgraph(g, k):
    """Keep the ``k`` heaviest out-edges of every node.

    Ties go to the smaller column index. On a graph produced by
    :func:`knn_graph` this reproduces the support of the ``k``-NN graph of
    the same points, since the kernel decreases with distance.
    """
    k = _check_k(k, g.n)
    order = np.argsort(-g.weights, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(g.n), k)
    cols = order.ravel()
    weights = np.zeros_like(g.weights)
    weights[rows, cols] = g.weights[rows, cols]
    return WeightedDigraph(weights)


def weakly_connected_components(g):
    """Weakly connected components, ordered by their smallest node index."""
    _, labels = connected_components(g.weights, directed=True, connection="weak")
    clusters = {}
    for node, label in enumerate(labels):
        clusters.setdefault(label, []).append(node)
    ordered = sorted(clusters.values(), key=lambda members: members[0])
    return Partition(clusters=tuple(tuple(members) for members in ordered))
