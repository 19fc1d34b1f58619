"""Path-integral descriptors of weighted digraphs.

Edge, node and set descriptors come from the exponent generating function
``Z = e^W / e^H``, evaluated as a truncated power series whose order is
chosen from a certified bound on the dropped tail.
"""

from collections import namedtuple
from dataclasses import dataclass
import itertools
import logging
import math

import numpy as np
from scipy.special import gammaln
from scipy.special import logsumexp

from egfcluster.graph import binary_support

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ORDER = 500
DEFAULT_Z_SCALE = 0.5
MIN_ORDER = 8
BRUTE_FORCE_LIMIT = 10 ** 7


@dataclass(frozen=True)
class LPathDescriptor:
    tau: np.ndarray
    phi_l_node: np.ndarray
    phi_l_set: float
    l: int


@dataclass(frozen=True)
class DescriptorResult:
    """Edge, node and set descriptors of one graph.

    ``z[i, j]`` is the edge descriptor, ``phi_node`` its row sums and
    ``phi_set`` their mean. ``residual_bound`` bounds the entry sum of the
    series tail dropped after ``truncation_order``.
    """

    z: np.ndarray
    phi_node: np.ndarray
    phi_set: float
    h: int
    truncation_order: int
    residual_bound: float


SetDescriptor = namedtuple(
    "SetDescriptor", ["phi_node", "phi_set", "h", "truncation_order", "residual_bound"]
)


@dataclass(frozen=True)
class CoefficientProfile:
    component_norms: np.ndarray
    alpha_tilde: np.ndarray
    argmax_l: int


def _check_node(g, node):
    if int(node) != node or not 0 <= node < g.n:
        raise ValueError(f"node {node} is out of range for a graph with {g.n} nodes")
    return int(node)


def path_integral_brute(g, i, j, l):
    """Sum of weight products over every length-``l`` walk from ``i`` to ``j``.

    Walks are enumerated one by one, so this is only meant as a reference
    for small graphs.
    """
    i = _check_node(g, i)
    j = _check_node(g, j)
    if int(l) != l or l < 1:
        raise ValueError(f"path length must be a positive integer, got {l}")
    l = int(l)
    if g.n ** l > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"enumerating {g.n}^{l} walks exceeds the limit of {BRUTE_FORCE_LIMIT}"
        )
    w = g.weights
    total = 0.0
    for middle in itertools.product(range(g.n), repeat=l - 1):
        walk = (i, *middle, j)
        product = 1.0
        for a, b in zip(walk[:-1], walk[1:]):
            product *= w[a, b]
            if product == 0.0:
                break
        total += product
    return total


def lpath_descriptor(g, l):
    if int(l) != l or l < 1:
        raise ValueError(f"path length must be a positive integer, got {l}")
    tau = np.linalg.matrix_power(g.weights, int(l))
    phi_l_node = tau.sum(axis=1)
    return LPathDescriptor(
        tau=tau, phi_l_node=phi_l_node, phi_l_set=float(phi_l_node.mean()), l=int(l)
    )


def normalized_power(g, l):
    """``W^l / H^(l-1)``, whose entries all lie in [0, 1]."""
    h = binary_support(g).h
    tau = lpath_descriptor(g, l).tau
    if h == 0:
        return tau
    return tau / float(h) ** (int(l) - 1)


def log_phi_l_set(g, l):
    """Natural log of the l-path set descriptor without forming ``W^l``.

    The walk-count vector is renormalised at every step, so very long paths
    stay representable. Returns ``-inf`` when no walk of length ``l`` exists.
    """
    v = np.ones(g.n)
    log_scale = 0.0
    for _ in range(int(l)):
        v = g.weights @ v
        total = v.sum()
        if total <= 0.0:
            return -math.inf
        log_scale += math.log(total)
        v /= total
    return log_scale - math.log(g.n)


def spectral_radius(g, max_iter=10000, tol=1e-13):
    """Perron root of a nonnegative matrix by power iteration."""
    x = np.ones(g.n) / g.n
    estimate = 0.0
    for _ in range(max_iter):
        y = g.weights @ x
        norm = y.sum()
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - estimate) <= tol * max(norm, 1.0):
            return float(norm)
        estimate = norm
    logger.debug("power iteration stopped after %d steps", max_iter)
    return float(estimate)


GraphStats = namedtuple(
    "GraphStats", ["n", "entry_sum", "support_sum", "h", "row_max"]
)


def graph_stats(g):
    support = binary_support(g)
    return GraphStats(
        n=g.n,
        entry_sum=g.entry_sum(),
        support_sum=int(support.a.sum()),
        h=support.h,
        row_max=float(g.weights.sum(axis=1).max()),
    )


def _log_term(s, l):
    return l * math.log(s) - gammaln(l + 1)


def _entry_sum_bound(stats, n_order):
    s, d, h = stats.entry_sum, stats.support_sum, stats.h
    if s == 0.0:
        return 0.0
    if n_order < d - 2:
        if d + 1 - s <= 0:
            raise ValueError(f"entry sum {s} does not satisfy ||W|| < D + 1 = {d + 1}")
        ls = np.arange(n_order + 1, d)
        log_terms = ls * math.log(s) - gammaln(ls + 1)
        log_tail = _log_term(s, d) + math.log((d + 1) / (d + 1 - s))
        log_total = logsumexp(np.append(log_terms, log_tail)) - h
    else:
        if n_order + 2 - s <= 0:
            raise ValueError(
                f"entry sum {s} does not satisfy ||W|| < n_order + 2 = {n_order + 2}; "
                "raise n_order"
            )
        log_total = (
            _log_term(s, n_order + 1) + math.log((n_order + 2) / (n_order + 2 - s)) - h
        )
    with np.errstate(over="ignore"):
        return float(np.exp(log_total))


def _row_sum_bound(stats, n_order):
    row_max, h = stats.row_max, stats.h
    if row_max == 0.0:
        return 0.0
    if n_order + 2 - row_max <= 0:
        raise ValueError(
            f"largest row sum {row_max} does not satisfy < n_order + 2 = {n_order + 2}"
        )
    log_total = (
        _log_term(row_max, n_order + 1)
        + math.log((n_order + 2) / (n_order + 2 - row_max))
        - h
    )
    return float(math.exp(log_total))


def _check_order(n_order):
    if int(n_order) != n_order or n_order < 0:
        raise ValueError(f"n_order must be a nonnegative integer, got {n_order}")
    return int(n_order)


def truncation_error_bound(g, n_order):
    """Bound on the entry sum of ``Z`` minus its partial sum through ``n_order``.

    Parameters
    ----------
    g : WeightedDigraph
        Graph whose descriptor is truncated.
    n_order : int
        Highest power of ``W`` kept in the partial sum.

    Returns
    -------
    float
        The geometric-tail bound in the entry-sum matrix norm. May be
        ``inf`` when the bound overflows.

    Raises
    ------
    ValueError
        If the geometric tail does not converge at this order.
    """
    return _entry_sum_bound(graph_stats(g), _check_order(n_order))


def row_sum_error_bound(g, n_order):
    """Bound on the largest row sum of the series tail after ``n_order``.

    Same geometric-tail argument as :func:`truncation_error_bound` with the
    largest row sum of ``W`` in place of its entry sum.
    """
    return _row_sum_bound(graph_stats(g), _check_order(n_order))


def _certified_bound(stats, n_order):
    bounds = []
    for bound, scale in ((_entry_sum_bound, 1), (_row_sum_bound, stats.n)):
        try:
            bounds.append(scale * bound(stats, n_order))
        except ValueError:
            bounds.append(math.inf)
    return min(bounds)


def truncation_order(g, tol=DEFAULT_TOL, max_order=DEFAULT_MAX_ORDER):
    """Smallest series order whose certified tail bound is within ``tol``.

    Returns
    -------
    tuple of (int, float)
        The order and the bound achieved at that order.

    Raises
    ------
    RuntimeError
        If ``max_order`` is reached first.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    stats = graph_stats(g)
    for n_order in range(MIN_ORDER, max_order + 1):
        bound = _certified_bound(stats, n_order)
        if bound <= tol:
            logger.debug("truncation order %d, bound %.3g (n=%d)", n_order, bound, g.n)
            return n_order, bound
    raise RuntimeError(
        f"no truncation order up to {max_order} meets tol={tol}; the graph is pathological"
    )


def descriptor(g, tol=DEFAULT_TOL, max_order=DEFAULT_MAX_ORDER):
    """Edge, node and set path-integral descriptors of ``g``."""
    order, bound = truncation_order(g, tol, max_order)
    h = binary_support(g).h
    w = g.weights
    term = np.eye(g.n)
    total = term.copy()
    for l in range(1, order + 1):
        term = term @ w / l
        total += term
    z = total * math.exp(-h)
    phi_node = z.sum(axis=1)
    z.flags.writeable = False
    phi_node.flags.writeable = False
    return DescriptorResult(
        z=z,
        phi_node=phi_node,
        phi_set=float(phi_node.mean()),
        h=h,
        truncation_order=order,
        residual_bound=bound,
    )


def expm_action(g, vector, order):
    """Partial sum through ``order`` of ``e^W`` applied to ``vector``."""
    w = g.weights
    term = np.array(vector, dtype=np.float64)
    total = term.copy()
    for l in range(1, order + 1):
        term = w @ term / l
        total += term
    return total


def set_descriptor(g, tol=DEFAULT_TOL, max_order=DEFAULT_MAX_ORDER):
    """Node and set descriptors only, from matrix-vector products.

    Agrees with :func:`descriptor` while avoiding the n-by-n series.
    """
    order, bound = truncation_order(g, tol, max_order)
    h = binary_support(g).h
    phi_node = expm_action(g, np.ones(g.n), order) * math.exp(-h)
    return SetDescriptor(
        phi_node=phi_node,
        phi_set=float(phi_node.mean()),
        h=h,
        truncation_order=order,
        residual_bound=bound,
    )


def coefficient_profile(g, l_max=100):
    """Weight of every path length in ``Z``.

    ``component_norms[l - 1]`` is the Frobenius norm of ``W^l / (l! e^H)``
    rescaled so the largest equals one, and ``alpha_tilde[l - 1]`` is the
    coefficient ``H^(l-1) / (l! e^H)`` of the normalised power ``W^l / H^(l-1)``.
    """
    if int(l_max) != l_max or l_max < 1:
        raise ValueError(f"l_max must be a positive integer, got {l_max}")
    l_max = int(l_max)
    h = binary_support(g).h
    scale = math.exp(-h)
    norms = np.zeros(l_max)
    alpha = np.zeros(l_max)
    term = np.eye(g.n)
    coefficient = scale
    for l in range(1, l_max + 1):
        term = term @ g.weights / l
        norms[l - 1] = np.linalg.norm(term) * scale
        if l > 1:
            coefficient = coefficient * h / l
        alpha[l - 1] = coefficient
    peak = norms.max()
    if peak > 0:
        norms = norms / peak
    return CoefficientProfile(
        component_norms=norms, alpha_tilde=alpha, argmax_l=int(np.argmax(norms)) + 1
    )


def baseline_collectiveness(g, z_reg=None):
    """Collectiveness from the ordinary generating function ``sum z^l W^l``.

    The set value ``(1/n) 1^T [(I - zW)^-1 - I] 1`` is divided by its
    largest possible value ``zH / (1 - zH)``, reached when every row of
    ``W`` sums to ``H``; the result lies in [0, 1]. ``z_reg`` defaults to
    ``0.5 / H``, where the normaliser is one and a frame with mean row sum
    ``0.9 H`` already scores about 0.8.
    """
    h = binary_support(g).h
    if h == 0:
        return 0.0
    if z_reg is None:
        z_reg = DEFAULT_Z_SCALE / h
    if not 0 < z_reg * h < 1:
        raise ValueError(f"z_reg={z_reg} must lie in (0, 1/H) with H={h}")
    system = np.eye(g.n) - z_reg * g.weights
    try:
        walks = np.linalg.solve(system, np.ones(g.n)) - 1.0
    except np.linalg.LinAlgError as e:
        raise RuntimeError(f"I - z W is singular: {e}")
    if not np.all(np.isfinite(walks)):
        raise RuntimeError("I - z W is numerically singular")
    raw = float(walks.mean())
    return raw * (1.0 - z_reg * h) / (z_reg * h)
