"""
Latent priors the adversarial autoencoder matches its aggregated posterior to.

Three families: isotropic-or-diagonal Gaussian, per-dimension generalized
Gaussian, and a ring (sphere of fixed radius) used for labeled anomalies.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple, Union

import numpy as np
from scipy.special import gammaln

from ..exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianPrior:
    """Independent zero-mean normals with per-dimension standard deviation."""
    dim: int
    sigma: Tuple[float, ...] = field(default=(10.0,))
    kind: str = field(default="gaussian", init=False)

    def __post_init__(self):
        sigma = tuple(float(s) for s in np.broadcast_to(np.asarray(self.sigma, dtype=float), (self.dim,)))
        object.__setattr__(self, "sigma", sigma)
        if self.dim < 1:
            raise ConfigError("prior dim must be >= 1")
        if any(s <= 0 for s in sigma):
            raise ConfigError("Gaussian sigma must be > 0")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((n, self.dim)) * np.asarray(self.sigma)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dim": self.dim, "sigma": list(self.sigma)}


@dataclass(frozen=True)
class GeneralizedGaussianPrior:
    """Per-dimension density beta / (2 alpha Gamma(1/beta)) * exp(-(|x - mu| / alpha)^beta)."""
    dim: int
    mu: float = 0.0
    alpha: float = 10.0
    beta: float = 2.0
    kind: str = field(default="generalized_gaussian", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("prior dim must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("generalized Gaussian alpha and beta must be > 0")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # |x - mu| / alpha = G^(1/beta) with G ~ Gamma(1/beta, 1); sign is a fair coin
        magnitude = rng.gamma(shape=1.0 / self.beta, scale=1.0, size=(n, self.dim)) ** (1.0 / self.beta)
        sign = np.where(rng.random((n, self.dim)) < 0.5, -1.0, 1.0)
        return self.mu + self.alpha * sign * magnitude

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return generalized_gaussian_pdf(x, self.mu, self.alpha, self.beta)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind, "dim": self.dim,
            "mu": self.mu, "alpha": self.alpha, "beta": self.beta
        }


@dataclass(frozen=True)
class RingPrior:
    """Uniform direction, fixed l2-norm ``radius``."""
    dim: int
    radius: float = 100.0
    kind: str = field(default="ring", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("prior dim must be >= 1")
        if self.radius <= 0:
            raise ConfigError("ring radius must be > 0")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sphere_sample(self.dim, self.radius, n, rng)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dim": self.dim, "radius": self.radius}


Prior = Union[GaussianPrior, GeneralizedGaussianPrior, RingPrior]


def sphere_sample(dim: int, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform on the sphere of ``radius`` in ``dim`` dimensions."""
    if radius == 0:
        return np.zeros((n, dim))
    draws = rng.standard_normal((n, dim))
    norms = np.linalg.norm(draws, axis=1, keepdims=True)
    # a zero draw has probability zero, but redraw rather than divide by it
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        draws[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(draws, axis=1, keepdims=True)
    return radius * draws / norms


def sample_prior(prior: Prior, n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. draws from ``prior`` as an (n x dim) matrix."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return prior.sample(int(n), rng)


def generalized_gaussian_pdf(x, mu: float, alpha: float, beta: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    log_norm = math.log(beta) - math.log(2.0 * alpha) - gammaln(1.0 / beta)
    return np.exp(log_norm - (np.abs(x - mu) / alpha) ** beta)


def generalized_gaussian_std(alpha: float, beta: float) -> float:
    """Standard deviation alpha * sqrt(Gamma(3/beta) / Gamma(1/beta))."""
    return alpha * math.exp(0.5 * (gammaln(3.0 / beta) - gammaln(1.0 / beta)))


def prior_from_dict(data: Dict[str, Any]) -> Prior:
    """Rebuild a prior from ``to_dict`` output or a config section."""
    kind = data.get("kind")
    try:
        if kind == "gaussian":
            return GaussianPrior(int(data["dim"]), tuple(np.atleast_1d(data.get("sigma", 10.0))))
        if kind == "generalized_gaussian":
            return GeneralizedGaussianPrior(
                int(data["dim"]),
                mu=float(data.get("mu", 0.0)),
                alpha=float(data.get("alpha", 10.0)),
                beta=float(data.get("beta", 2.0))
            )
        if kind == "ring":
            return RingPrior(int(data["dim"]), radius=float(data.get("radius", 100.0)))
    except KeyError as e:
        raise ConfigError(f"prior config is missing {e}") from e
    raise ConfigError(f"Unknown prior kind: {kind!r}")
