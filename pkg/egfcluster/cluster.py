"""Agglomerative clustering driven by path-integral descriptors.

Initial clusters are the weakly connected components of a K_o-NN graph.
The pair of clusters with the largest structural affinity is merged until
the target number of clusters remains; each final cluster then gets an
exemplar.
"""

from collections import namedtuple
import logging
import math

import numpy as np

from egfcluster.graph import binary_support
from egfcluster.graph import knn_graph
from egfcluster.graph import knn_subgraph
from egfcluster.graph import Partition
from egfcluster.graph import PointSet
from egfcluster.graph import subgraph
from egfcluster.graph import weakly_connected_components
from egfcluster.graph import WeightedDigraph
from egfcluster.pathint import DEFAULT_MAX_ORDER
from egfcluster.pathint import DEFAULT_TOL
from egfcluster.pathint import descriptor
from egfcluster.pathint import expm_action
from egfcluster.pathint import set_descriptor
from egfcluster.pathint import truncation_order

logger = logging.getLogger(__name__)

__all__ = [
    "AffinityEntry",
    "Partition",
    "affinity",
    "agglomerate",
    "cluster_points",
    "conditional_descriptor",
    "exemplar",
]

AffinityEntry = namedtuple("AffinityEntry", ["a_index", "b_index", "value"])

# scores closer than this (relative) count as ties
TIE_RTOL = 1e-12

PAIR_CANDIDATES = ("adjacent", "all")


def _first_max(values):
    values = np.asarray(values, dtype=np.float64)
    best = values.max()
    threshold = best - TIE_RTOL * max(abs(best), 1.0)
    return int(np.flatnonzero(values >= threshold)[0])


def conditional_descriptor(
    g_union, member_mask, tol=DEFAULT_TOL, max_order=DEFAULT_MAX_ORDER
):
    """Set descriptor of the masked nodes with walks allowed through all of ``g_union``.

    Parameters
    ----------
    g_union : WeightedDigraph
        Graph restricted to the union of both clusters.
    member_mask : array_like of bool
        Indicator of the cluster whose descriptor is computed.

    Returns
    -------
    float
        ``m^T e^W m / (|m| e^H)`` with ``H`` the largest out-degree of
        ``g_union``.
    """
    mask = np.asarray(member_mask, dtype=bool)
    if mask.shape != (g_union.n,):
        raise ValueError(
            f"member_mask must have length {g_union.n}, got shape {mask.shape}"
        )
    count = int(mask.sum())
    if count == 0:
        raise ValueError("member_mask selects no nodes")
    order, _ = truncation_order(g_union, tol, max_order)
    h = binary_support(g_union).h
    m = mask.astype(np.float64)
    walks = float(m @ expm_action(g_union, m, order))
    return walks * math.exp(-h) / count


def _canonical(ca, cb):
    ca = tuple(sorted(int(i) for i in ca))
    cb = tuple(sorted(int(i) for i in cb))
    if not ca or not cb:
        raise ValueError("clusters must be nonempty")
    if set(ca) & set(cb):
        raise ValueError("clusters must be disjoint")
    if cb[0] < ca[0]:
        ca, cb = cb, ca
    return ca, cb


class _AffinityCache:
    """Affinities keyed by cluster contents.

    A key fixes every input of the computation, so a hit returns exactly
    what recomputation would.
    """

    def __init__(self, g, tol, max_order):
        self.g = g
        self.tol = tol
        self.max_order = max_order
        self._set_values = {}
        self._pair_values = {}

    def set_value(self, members):
        if members not in self._set_values:
            g_sub = subgraph(self.g, members)
            self._set_values[members] = set_descriptor(
                g_sub, self.tol, self.max_order
            ).phi_set
        return self._set_values[members]

    def pair_value(self, ca, cb):
        key = _canonical(ca, cb)
        if key not in self._pair_values:
            ca, cb = key
            union = ca + cb
            g_union = subgraph(self.g, union)
            mask_a = np.arange(len(union)) < len(ca)
            conditional_a = conditional_descriptor(
                g_union, mask_a, self.tol, self.max_order
            )
            conditional_b = conditional_descriptor(
                g_union, ~mask_a, self.tol, self.max_order
            )
            self._pair_values[key] = (conditional_a - self.set_value(ca)) + (
                conditional_b - self.set_value(cb)
            )
        return self._pair_values[key]


def affinity(g_global, ca, cb, tol=DEFAULT_TOL, max_order=DEFAULT_MAX_ORDER):
    """Structural affinity of two disjoint node sets of ``g_global``.

    The gain of each set's descriptor when walks may pass through the
    other set, summed over both sets. The value is the same for either
    argument order.
    """
    return _AffinityCache(g_global, tol, max_order).pair_value(ca, cb)


def exemplar(z_cluster):
    """Local index of the node with the largest in- plus out-descriptor mass.

    Parameters
    ----------
    z_cluster : DescriptorResult
        Descriptor of the cluster's own sub-graph.

    Returns
    -------
    int
        Row of ``z_cluster.z`` maximising row sum plus column sum; ties go
        to the smallest index.
    """
    z = z_cluster.z
    return _first_max(z.sum(axis=1) + z.sum(axis=0))


def _adjacent_pairs(g, clusters):
    labels = Partition(clusters=clusters).labels(g.n)
    indicator = np.zeros((g.n, len(clusters)))
    indicator[np.arange(g.n), labels] = 1.0
    links = indicator.T @ (g.weights > 0).astype(np.float64) @ indicator
    links = links + links.T
    return {
        (a, b)
        for a in range(len(clusters))
        for b in range(a + 1, len(clusters))
        if links[a, b] > 0
    }


def _initial_partition(g_global, k0):
    if g_global.n == 1:
        return Partition(clusters=((0,),))
    h = binary_support(g_global).h
    if k0 > h:
        raise ValueError(f"k0={k0} exceeds the largest out-degree {h} of the graph")
    return weakly_connected_components(knn_subgraph(g_global, k0))


def agglomerate(
    g_global,
    target_k,
    k0=1,
    tol=DEFAULT_TOL,
    max_order=DEFAULT_MAX_ORDER,
    pair_candidates="adjacent",
):
    """Greedy agglomerative clustering on a K-NN graph.

    Parameters
    ----------
    g_global : WeightedDigraph
        K-NN graph of the data.
    target_k : int
        Number of clusters to stop at.
    k0 : int
        Out-degree of the graph whose weakly connected components form the
        initial clusters. It is derived from ``g_global`` by keeping the
        ``k0`` heaviest out-edges of every node, so ``k0`` may not exceed
        the largest out-degree of ``g_global``.
    pair_candidates : str
        ``"adjacent"`` scores only cluster pairs joined by at least one
        edge, falling back to every pair when no such pair is left;
        ``"all"`` scores every pair.

    Returns
    -------
    Partition
        Final clusters ordered by smallest member, with exemplars.

    Raises
    ------
    ValueError
        If ``target_k`` exceeds the number of initial clusters, or ``k0``
        exceeds the out-degree of ``g_global``.
    """
    if int(target_k) != target_k or target_k < 1:
        raise ValueError(f"target_k must be a positive integer, got {target_k}")
    if int(k0) != k0 or k0 < 1:
        raise ValueError(f"k0 must be a positive integer, got {k0}")
    if pair_candidates not in PAIR_CANDIDATES:
        raise ValueError(
            f"pair_candidates must be one of {PAIR_CANDIDATES}, got {pair_candidates!r}"
        )
    partition = _initial_partition(g_global, int(k0))
    if target_k > len(partition):
        raise ValueError(
            f"target_k={target_k} exceeds the {len(partition)} initial clusters; "
            "clusters are never split"
        )
    logger.debug("%d initial clusters, target %d", len(partition), target_k)
    cache = _AffinityCache(g_global, tol, max_order)
    while len(partition) > target_k:
        clusters = list(partition.clusters)
        pairs = None
        if pair_candidates == "adjacent":
            pairs = _adjacent_pairs(g_global, clusters)
        if not pairs:
            pairs = {
                (a, b) for a in range(len(clusters)) for b in range(a + 1, len(clusters))
            }
        # clusters stay sorted by smallest member, so sorted pairs follow the tie rule
        ordered = sorted(pairs)
        values = [cache.pair_value(clusters[a], clusters[b]) for a, b in ordered]
        a, b = ordered[_first_max(values)]
        merged = tuple(sorted(clusters[a] + clusters[b]))
        logger.debug(
            "merge clusters starting at %d and %d (affinity %.6g), %d left",
            clusters[a][0],
            clusters[b][0],
            max(values),
            len(clusters) - 1,
        )
        clusters = [c for index, c in enumerate(clusters) if index not in (a, b)]
        clusters.append(merged)
        clusters.sort(key=lambda members: members[0])
        partition = Partition(clusters=tuple(clusters))
    exemplars = []
    for members in partition.clusters:
        local = exemplar(descriptor(subgraph(g_global, members), tol, max_order))
        exemplars.append(members[local])
    return Partition(clusters=partition.clusters, exemplars=tuple(exemplars))


def cluster_points(
    points,
    target_k,
    k=5,
    k0=1,
    bandwidth_scale=1.0,
    tol=DEFAULT_TOL,
    max_order=DEFAULT_MAX_ORDER,
    pair_candidates="adjacent",
):
    """Cluster raw points: build their K-NN graph, then :func:`agglomerate`.

    ``k`` and ``k0`` are capped at one less than the number of points.

    Returns
    -------
    tuple of (Partition, WeightedDigraph)
    """
    if k0 > k:
        raise ValueError(f"k0={k0} must not exceed k={k}")
    point_set = points if isinstance(points, PointSet) else PointSet(points)
    if point_set.n == 1:
        g = WeightedDigraph(np.zeros((1, 1)))
    else:
        g = knn_graph(point_set, min(k, point_set.n - 1), bandwidth_scale)
    partition = agglomerate(
        g,
        target_k,
        k0=min(k0, max(point_set.n - 1, 1)),
        tol=tol,
        max_order=max_order,
        pair_candidates=pair_candidates,
    )
    return partition, g
