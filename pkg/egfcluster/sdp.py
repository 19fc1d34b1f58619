"""Vicsek self-driven particles on a periodic square box.

Every frame each particle takes the circular mean heading of all particles
within the interaction radius (itself included), adds uniform noise in
``[-eta*pi, eta*pi]``, and moves at constant speed along the new heading.
Random numbers come from numpy's PCG64 generator.
"""

from dataclasses import dataclass
from dataclasses import field
import logging

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from egfcluster.graph import velocity_knn_graph
from egfcluster.metrics import pearson
from egfcluster.pathint import baseline_collectiveness
from egfcluster.pathint import DEFAULT_TOL
from egfcluster.pathint import set_descriptor

logger = logging.getLogger(__name__)


def wrap_positions(positions, box_size):
    positions = np.mod(positions, box_size)
    # np.mod can round tiny negative values up to box_size itself
    positions[positions >= box_size] -= box_size
    return positions


def wrap_angles(angles):
    return np.mod(angles + np.pi, 2 * np.pi) - np.pi


@dataclass(frozen=True)
class ParticleState:
    positions: np.ndarray
    headings: np.ndarray
    speed: float
    box_size: float
    interaction_radius: float
    noise_level: float
    frame: int = 0

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64)
        headings = np.array(self.headings, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValueError(f"positions must be (n, 2), got {positions.shape}")
        if headings.shape != (positions.shape[0],):
            raise ValueError("need one heading per particle")
        if self.speed <= 0:
            raise ValueError(f"speed must be positive, got {self.speed}")
        if self.box_size <= 0 or self.interaction_radius <= 0:
            raise ValueError("box_size and interaction_radius must be positive")
        if not 0 <= self.noise_level <= 1:
            raise ValueError(f"noise_level must lie in [0, 1], got {self.noise_level}")
        if np.any(positions < 0) or np.any(positions >= self.box_size):
            raise ValueError(f"positions must lie in [0, {self.box_size})")
        positions.flags.writeable = False
        headings.flags.writeable = False
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "headings", headings)

    @property
    def n(self):
        return self.positions.shape[0]

    def velocities(self):
        return self.speed * np.stack([np.cos(self.headings), np.sin(self.headings)], axis=1)


def init_state(n, box_size, speed, r, eta, seed=None):
    """Particles with uniform random positions and headings.

    ``seed`` may be an integer or an existing ``numpy.random.Generator``,
    which is then advanced.
    """
    if n < 2:
        raise ValueError(f"need at least two particles, got {n}")
    rng = np.random.default_rng(seed)
    positions = wrap_positions(rng.uniform(0.0, box_size, size=(n, 2)), box_size)
    headings = rng.uniform(-np.pi, np.pi, size=n)
    return ParticleState(
        positions=positions,
        headings=headings,
        speed=speed,
        box_size=box_size,
        interaction_radius=r,
        noise_level=eta,
    )


def neighbor_pairs(state):
    """Pairs ``(i, j)``, ``i < j``, closer than the interaction radius."""
    tree = cKDTree(state.positions, boxsize=state.box_size)
    return tree.query_pairs(state.interaction_radius, output_type="ndarray")


def step(state, rng):
    """Advance one frame; all headings update from the frame-t state."""
    cos = np.cos(state.headings)
    sin = np.sin(state.headings)
    sum_cos = cos.copy()
    sum_sin = sin.copy()
    pairs = neighbor_pairs(state)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        np.add.at(sum_cos, i, cos[j])
        np.add.at(sum_cos, j, cos[i])
        np.add.at(sum_sin, i, sin[j])
        np.add.at(sum_sin, j, sin[i])
    noise = rng.uniform(-state.noise_level * np.pi, state.noise_level * np.pi, size=state.n)
    headings = wrap_angles(np.arctan2(sum_sin, sum_cos) + noise)
    moves = state.speed * np.stack([np.cos(headings), np.sin(headings)], axis=1)
    positions = wrap_positions(state.positions + moves, state.box_size)
    return ParticleState(
        positions=positions,
        headings=headings,
        speed=state.speed,
        box_size=state.box_size,
        interaction_radius=state.interaction_radius,
        noise_level=state.noise_level,
        frame=state.frame + 1,
    )


def simulate(state, frames, rng):
    """Yield ``state`` and the ``frames - 1`` states that follow it."""
    for index in range(frames):
        if index:
            state = step(state, rng)
        yield state


def order_parameter(state):
    """Length of the mean heading unit vector, 0 for disorder and 1 for alignment."""
    headings = state.headings
    return float(np.hypot(np.cos(headings).mean(), np.sin(headings).mean()))


@dataclass(frozen=True)
class ExperimentSeries:
    frames: np.ndarray
    gt_order: np.ndarray
    phi_proposed: np.ndarray
    phi_baseline: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.frames)

    def to_frame(self):
        return pd.DataFrame(
            {
                "frame": self.frames,
                "gt": self.gt_order,
                "proposed": self.phi_proposed,
                "baseline": self.phi_baseline,
            }
        )

    def correlations(self):
        """Pearson correlation of the ground truth with both measures.

        Returns
        -------
        tuple of float
            ``(gt vs proposed, gt vs baseline)``.
        """
        return (
            pearson(self.gt_order, self.phi_proposed).value,
            pearson(self.gt_order, self.phi_baseline).value,
        )


def run_experiment(
    n=400,
    k=20,
    box_size=7.0,
    speed=0.03,
    r=1.0,
    eta=0.0,
    frames=100,
    seed=0,
    tol=DEFAULT_TOL,
    z_reg=None,
):
    """Simulate and measure collectiveness at the start of every frame.

    Each frame records the order parameter, the path-integral set
    descriptor of the velocity K-NN graph and the baseline collectiveness
    of the same graph, then steps the particles.
    """
    if frames < 1:
        raise ValueError(f"frames must be at least 1, got {frames}")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    state = init_state(n, box_size, speed, r, eta, seed=rng)
    records = np.zeros((frames, 4))
    for index, current in enumerate(simulate(state, frames, rng)):
        g = velocity_knn_graph(current, k)
        records[index] = (
            current.frame,
            order_parameter(current),
            set_descriptor(g, tol).phi_set,
            baseline_collectiveness(g, z_reg),
        )
        logger.debug("frame %d: %s", current.frame, records[index, 1:])
    metadata = {
        "seed": seed,
        "n": n,
        "k": k,
        "box_size": box_size,
        "speed": speed,
        "r": r,
        "eta": eta,
        "frames": frames,
    }
    return ExperimentSeries(
        frames=records[:, 0].astype(np.int64),
        gt_order=records[:, 1],
        phi_proposed=records[:, 2],
        phi_baseline=records[:, 3],
        metadata=metadata,
    )
