"""
Latent-space sampling: fixed-magnitude spheres, the edge band and InterNN.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from ..aae.priors import sphere_sample
from ..exceptions import EmptyEdgeSetError, PoolTooSmallError

logger = logging.getLogger(__name__)

EDGE_STD_MULTIPLIER = 3.0
EDGE_PERCENTILE = 90.0


@dataclass(frozen=True)
class EdgeParams:
    """Norm band (alpha, beta), both bounds exclusive."""
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < self.beta:
            raise ValueError(f"edge band needs 0 <= alpha < beta, got ({self.alpha}, {self.beta})")

    def contains(self, norms: np.ndarray) -> np.ndarray:
        return (norms > self.alpha) & (norms < self.beta)


def magnitude_sample(latent_dim: int, r: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n latent vectors uniform on the sphere of radius ``r``."""
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    return sphere_sample(latent_dim, float(r), int(n), rng)


def nearest_rank_percentile(values: np.ndarray, q: float) -> float:
    """Smallest value with at least q% of the data at or below it."""
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    rank = int(np.ceil(q / 100.0 * ordered.size))
    return float(ordered[max(rank, 1) - 1])


def compute_edge_set(Z: np.ndarray) -> Tuple[np.ndarray, EdgeParams]:
    """Indices of latent vectors in the edge band and the band itself.

    beta is the mean norm plus three population standard deviations; norms at
    or above beta are treated as outliers and dropped, and alpha is the 90th
    (nearest-rank) percentile of what remains.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise ValueError("edge set needs a non-empty 2-D latent matrix")

    norms = np.linalg.norm(Z, axis=1)
    beta = float(norms.mean() + EDGE_STD_MULTIPLIER * norms.std())
    remaining = norms[norms < beta]
    if remaining.size == 0:
        raise EmptyEdgeSetError("every latent norm lies at or above the outlier cutoff")
    alpha = nearest_rank_percentile(remaining, EDGE_PERCENTILE)
    if not alpha < beta:
        raise EmptyEdgeSetError(f"edge band is empty (alpha={alpha}, beta={beta})")

    params = EdgeParams(alpha, beta)
    indices = np.flatnonzero(params.contains(norms))
    if indices.size == 0:
        raise EmptyEdgeSetError(f"no latent vector has alpha={alpha:.4g} < norm < beta={beta:.4g}")

    logger.info(
        f"🎯 Edge set: {indices.size}/{Z.shape[0]} latent vectors with "
        f"{alpha:.3f} < ||z|| < {beta:.3f}"
    )
    return indices, params


def nearest_neighbors(queries: np.ndarray, pool: np.ndarray, exclude: Optional[np.ndarray] = None) -> np.ndarray:
    """Index into ``pool`` of each query's Euclidean nearest neighbour.

    ``exclude[i]`` (if >= 0) is a pool index query i may not match. Ties go
    to the lowest index.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise PoolTooSmallError("nearest-neighbour pool is empty")
    distances = cdist(queries, pool, "sqeuclidean")
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=np.int64)
        rows = np.flatnonzero(exclude >= 0)
        distances[rows, exclude[rows]] = np.inf
    if np.any(np.all(np.isinf(distances), axis=1)):
        raise PoolTooSmallError("nearest-neighbour pool has no candidate besides the query")
    return np.argmin(distances, axis=1)


def interpolate(samples: np.ndarray, neighbors: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """coef * (neighbor - sample) + sample, row-wise."""
    coef = np.asarray(coef, dtype=np.float64).reshape(-1, 1)
    return coef * (neighbors - samples) + samples


def inter_nn(
    z_sample: np.ndarray,
    Z_pool: np.ndarray,
    rng: np.random.Generator,
    exclude_index: Optional[int] = None,
    coef: Optional[float] = None
) -> np.ndarray:
    """Interpolate ``z_sample`` towards its nearest neighbour by a U(0, 1) coefficient.

    The query itself is excluded from the pool: by ``exclude_index`` when the
    caller knows its position, otherwise every pool row identical to it.
    """
    z_sample = np.asarray(z_sample, dtype=np.float64).reshape(-1)
    Z_pool = np.atleast_2d(np.asarray(Z_pool, dtype=np.float64))
    if exclude_index is not None:
        exclude = np.array([exclude_index])
        neighbor = nearest_neighbors(z_sample, Z_pool, exclude)[0]
    else:
        candidates = np.flatnonzero(np.any(Z_pool != z_sample, axis=1))
        if candidates.size == 0:
            raise PoolTooSmallError("nearest-neighbour pool has no candidate besides the query")
        neighbor = candidates[nearest_neighbors(z_sample, Z_pool[candidates])[0]]
    coef = rng.uniform(0.0, 1.0) if coef is None else coef
    return interpolate(z_sample[None, :], Z_pool[neighbor][None, :], np.array([coef]))[0]
