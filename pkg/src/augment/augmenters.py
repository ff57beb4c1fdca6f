"""
Augmentation algorithms: DOPING, magnitude-based decoding and the baselines.

DOPING encodes the training set, keeps the latent vectors in the edge band,
draws K of them with replacement, interpolates each towards its nearest
encoded neighbour and decodes the result.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..aae.model import AaeModel, decode, encode
from ..data.datasets import Dataset, round_half_up
from ..exceptions import FeatureRangeError, MissingModelError, PoolTooSmallError
from .sampling import EdgeParams, compute_edge_set, interpolate, magnitude_sample, nearest_neighbors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoAugmentation:
    name: str = field(default="none", init=False)


@dataclass(frozen=True)
class Doping:
    """Edge-based latent sampling + InterNN + decode."""
    name: str = field(default="doping", init=False)


@dataclass(frozen=True)
class MagnitudeSampling:
    """Decode latent vectors drawn from the sphere of ``radius``."""
    radius: float = 20.0
    name: str = field(default="magnitude", init=False)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("magnitude radius must be > 0")


@dataclass(frozen=True)
class RandomNoise:
    """Flip a ``fraction`` of the coordinates of random source rows around 0.5."""
    fraction: float = 0.1
    name: str = field(default="noise", init=False)

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("noise fraction must lie in [0, 1]")


@dataclass(frozen=True)
class SmoteVariant:
    """Data-space interpolation towards the nearest neighbour of random rows."""
    name: str = field(default="smote", init=False)


AugmenterKind = Union[NoAugmentation, Doping, MagnitudeSampling, RandomNoise, SmoteVariant]

AUGMENTER_NAMES = ("none", "doping", "noise", "smote")


def parse_augmenter(name: str, noise_fraction: float = 0.1) -> AugmenterKind:
    """Map a CLI/config name to an augmenter."""
    key = name.strip().lower()
    if key == "none":
        return NoAugmentation()
    if key == "doping":
        return Doping()
    if key in ("noise", "random_noise"):
        return RandomNoise(noise_fraction)
    if key in ("smote", "smote_variant"):
        return SmoteVariant()
    if key.startswith("magnitude:"):
        return MagnitudeSampling(float(key.split(":", 1)[1]))
    raise ValueError(f"Unknown augmentation method {name!r}; choose from {AUGMENTER_NAMES}")


@dataclass
class DopingResult:
    """Synthetic rows plus the latent bookkeeping that produced them."""
    samples: np.ndarray
    latents: np.ndarray
    edge_indices: np.ndarray
    edge_params: Optional[EdgeParams]


def _matrix(X) -> np.ndarray:
    return np.asarray(getattr(X, "X", X), dtype=np.float64)


def doping_details(
    model: AaeModel,
    X,
    k: int,
    rng: np.random.Generator,
    coef: Optional[float] = None
) -> DopingResult:
    """Run DOPING and keep the edge set, band and synthetic latents."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    X = _matrix(X)
    if k == 0:
        return DopingResult(
            np.empty((0, model.input_dim)), np.empty((0, model.latent_dim)),
            np.empty(0, dtype=np.int64), None
        )

    Z = encode(model, X)
    edge_idx, params = compute_edge_set(Z)
    picks = rng.choice(edge_idx, size=k, replace=True)
    neighbors = nearest_neighbors(Z[picks], Z, exclude=picks)
    coefs = np.full(k, coef) if coef is not None else rng.uniform(0.0, 1.0, size=k)
    Z_synth = interpolate(Z[picks], Z[neighbors], coefs)
    samples = decode(model, Z_synth)
    logger.info(f"💊 DOPING synthesized {k} samples from {edge_idx.size} edge latents")
    return DopingResult(samples, Z_synth, edge_idx, params)


def doping(model: AaeModel, X, k: int, rng: np.random.Generator) -> np.ndarray:
    """K synthetic infrequent-normal samples (k x input_dim)."""
    return doping_details(model, X, k, rng).samples


def decode_magnitude(model: AaeModel, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Decode n latent vectors from the sphere of ``radius``."""
    if n == 0:
        return np.empty((0, model.input_dim))
    return decode(model, magnitude_sample(model.latent_dim, radius, n, rng))


def decode_rings(model: AaeModel, radii, n_per_radius: int, rng: np.random.Generator) -> np.ndarray:
    """Decoded samples at several radii; columns are features then the radius."""
    blocks = []
    for r in radii:
        samples = decode_magnitude(model, float(r), n_per_radius, rng)
        blocks.append(np.hstack([samples, np.full((samples.shape[0], 1), float(r))]))
    return np.vstack(blocks) if blocks else np.empty((0, model.input_dim + 1))


def random_noise_augment(X, n: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Copies of random rows with a ``fraction`` of coordinates pushed to 0 or 1.

    A selected coordinate becomes 1 if its original value is below 0.5, else 0.
    """
    X = _matrix(X)
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise FeatureRangeError("random noise augmentation needs features scaled to [0, 1]")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if n == 0:
        return np.empty((0, X.shape[1]))
    if X.shape[0] == 0:
        raise PoolTooSmallError("cannot pick source rows from an empty dataset")

    sources = rng.integers(0, X.shape[0], size=n)
    out = X[sources].copy()
    n_flip = round_half_up(fraction * X.shape[1])
    if n_flip:
        # a random permutation prefix per row selects distinct coordinates
        coords = np.argsort(rng.random((n, X.shape[1])), axis=1)[:, :n_flip]
        rows = np.repeat(np.arange(n), n_flip)
        cols = coords.reshape(-1)
        out[rows, cols] = np.where(out[rows, cols] < 0.5, 1.0, 0.0)
    return out


def smote_variant(
    X,
    n: int,
    rng: np.random.Generator,
    coef: Optional[float] = None,
    sources: Optional[np.ndarray] = None
) -> np.ndarray:
    """n data-space InterNN interpolations from random source rows, ignoring labels."""
    X = _matrix(X)
    if X.shape[0] < 2:
        raise PoolTooSmallError("SMOTE variant needs at least 2 rows")
    if n == 0:
        return np.empty((0, X.shape[1]))
    if sources is None:
        sources = rng.integers(0, X.shape[0], size=n)
    sources = np.asarray(sources, dtype=np.int64)
    neighbors = nearest_neighbors(X[sources], X, exclude=sources)
    coefs = np.full(sources.size, coef) if coef is not None else rng.uniform(0.0, 1.0, size=sources.size)
    return interpolate(X[sources], X[neighbors], coefs)


def synthesize(
    X,
    method: AugmenterKind,
    n: int,
    rng: np.random.Generator,
    model: Optional[AaeModel] = None
) -> np.ndarray:
    """Synthetic rows only, for any augmenter."""
    if isinstance(method, (Doping, MagnitudeSampling)) and model is None:
        raise MissingModelError(f"{method.name} augmentation needs a trained AAE")
    if isinstance(method, NoAugmentation):
        return np.empty((0, _matrix(X).shape[1]))
    if isinstance(method, Doping):
        return doping(model, X, n, rng)
    if isinstance(method, MagnitudeSampling):
        return decode_magnitude(model, method.radius, n, rng)
    if isinstance(method, RandomNoise):
        return random_noise_augment(X, n, method.fraction, rng)
    if isinstance(method, SmoteVariant):
        return smote_variant(X, n, rng)
    raise TypeError(f"Unsupported augmenter: {method!r}")


def augment_dataset(
    X: Dataset,
    method: AugmenterKind,
    n: int,
    rng: np.random.Generator,
    model: Optional[AaeModel] = None
) -> Dataset:
    """Original rows (untouched) followed by n synthetic rows; labels are dropped."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if isinstance(method, (Doping, MagnitudeSampling)) and model is None:
        raise MissingModelError(f"{method.name} augmentation needs a trained AAE")
    if isinstance(method, NoAugmentation):
        n = 0
    base = X if isinstance(X, Dataset) else Dataset(np.asarray(X, dtype=np.float64))
    synthetic = synthesize(base.X, method, n, rng, model) if n else np.empty((0, base.n_features))
    augmented = Dataset(np.vstack([base.X, synthetic]), None, f"{base.name}+{method.name}")
    logger.debug(f"Augmented {base.name}: {base.n_rows} + {synthetic.shape[0]} rows via {method.name}")
    return augmented
