"""
Adversarial autoencoder: networks, training procedures and encode/decode.

Each minibatch runs three phases in order: reconstruction (encoder + decoder
on MSE), regularization of the discriminator (prior draws labeled 1, encodings
labeled 0) and the generator phase (encoder pushed to make the discriminator
output 1 on encodings, non-saturating loss). Every network gets its own ADAM
state.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from tqdm import tqdm

from ..exceptions import DimensionMismatchError, InvalidLabelsError, TrainingDivergedError
from ..nn.core import (
    Activation, AdamState, Mlp, adam_step, as_matrix, backward, bce_logit_loss,
    build_mlp, forward, mse_loss
)
from ..nn.rng import make_rng
from .priors import Prior, RingPrior

logger = logging.getLogger(__name__)


class AaeTrainConfig(BaseModel):
    """Training hyperparameters; desk-scale defaults for 2-D/3-D synthetic data.

    Labeled training runs at ``labeled_lr`` and fills ``anomaly_share`` of every
    minibatch with anomalous rows. With a few percent of anomalies a plain
    shuffle leaves the ring target a handful of rows per batch, too weak to
    carry their encodings out to radius 100 within the step budget.
    """

    epochs: Optional[int] = Field(None, ge=1)
    steps: int = Field(2000, ge=1)
    batch_size: int = Field(100, ge=1)
    lr: float = Field(1e-4)
    labeled_lr: float = Field(1e-3)
    anomaly_share: float = Field(0.5, gt=0, lt=1)
    hidden_units: int = Field(64, ge=1)
    latent_dim: int = Field(2, ge=1)
    seed: int = Field(0)
    labeled: bool = Field(False)
    label_width: int = Field(0, ge=0)
    progress: bool = Field(False)

    @field_validator("lr", "labeled_lr")
    @classmethod
    def validate_lr(cls, v):
        if not v > 0:
            raise ValueError("Learning rate must be positive")
        return v

    @model_validator(mode="after")
    def default_label_width(self):
        if self.labeled and self.label_width == 0:
            self.label_width = 2
        if not self.labeled:
            self.label_width = 0
        return self

    def total_steps(self, n_rows: int) -> int:
        """Minibatch steps to run; ``epochs`` wins over ``steps`` when set."""
        if self.epochs is not None:
            return self.epochs * math.ceil(n_rows / min(self.batch_size, n_rows))
        return self.steps


@dataclass
class TrainingHistory:
    """Per-step losses of the three training phases."""
    reconstruction: List[float] = field(default_factory=list)
    discriminator: List[float] = field(default_factory=list)
    generator: List[float] = field(default_factory=list)

    def record(self, recon: float, disc: float, gen: float):
        self.reconstruction.append(recon)
        self.discriminator.append(disc)
        self.generator.append(gen)


@dataclass
class AaeModel:
    """Encoder, decoder and discriminator plus the prior they were trained against."""
    encoder: Mlp
    decoder: Mlp
    discriminator: Mlp
    latent_dim: int
    input_dim: int
    prior: Prior
    label_width: int = 0
    anomaly_prior: Optional[Prior] = None
    history: Optional[TrainingHistory] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.encoder.in_dim != self.input_dim or self.decoder.out_dim != self.input_dim:
            raise DimensionMismatchError("encoder input / decoder output must equal input_dim")
        if self.encoder.out_dim != self.latent_dim or self.decoder.in_dim != self.latent_dim:
            raise DimensionMismatchError("encoder output / decoder input must equal latent_dim")
        if self.discriminator.in_dim != self.latent_dim + self.label_width:
            raise DimensionMismatchError("discriminator input must equal latent_dim + label_width")
        if self.decoder.layers[-1].activation is not Activation.LINEAR:
            raise ValueError("decoder output layer must be linear")
        if self.prior.dim != self.latent_dim:
            raise DimensionMismatchError(f"prior dim {self.prior.dim} != latent_dim {self.latent_dim}")

    @property
    def labeled(self) -> bool:
        return self.label_width > 0


def build_aae(
    input_dim: int,
    cfg: AaeTrainConfig,
    prior: Prior,
    rng: np.random.Generator,
    anomaly_prior: Optional[Prior] = None
) -> AaeModel:
    """Freshly initialized AAE: every network has two ReLU hidden layers."""
    hidden = cfg.hidden_units
    encoder = build_mlp([input_dim, hidden, hidden, cfg.latent_dim], rng)
    decoder = build_mlp([cfg.latent_dim, hidden, hidden, input_dim], rng)
    discriminator = build_mlp([cfg.latent_dim + cfg.label_width, hidden, hidden, 1], rng)
    return AaeModel(
        encoder=encoder,
        decoder=decoder,
        discriminator=discriminator,
        latent_dim=cfg.latent_dim,
        input_dim=input_dim,
        prior=prior,
        label_width=cfg.label_width,
        anomaly_prior=anomaly_prior
    )


def _features(train) -> np.ndarray:
    return as_matrix(getattr(train, "X", train), name="training features")


def _minibatches(n: int, batch_size: int, steps: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Index batches from successive shuffled passes over the rows."""
    batch_size = min(batch_size, n)
    emitted = 0
    while emitted < steps:
        order = rng.permutation(n)
        for start in range(0, n - batch_size + 1, batch_size):
            yield order[start:start + batch_size]
            emitted += 1
            if emitted == steps:
                return


def _index_stream(indices: np.ndarray, size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Endless chunks of ``size`` taken from successive shuffled passes over ``indices``."""
    pending = np.empty(0, dtype=np.int64)
    while True:
        while pending.size < size:
            pending = np.concatenate([pending, rng.permutation(indices)])
        yield pending[:size]
        pending = pending[size:]


def _labeled_minibatches(
    labels: np.ndarray,
    batch_size: int,
    share: float,
    steps: int,
    rng: np.random.Generator
) -> Iterator[np.ndarray]:
    """Batches holding a fixed share of anomalous rows; the minority class is cycled."""
    normal = np.flatnonzero(labels == 0)
    anomalous = np.flatnonzero(labels == 1)
    if normal.size == 0 or anomalous.size == 0:
        yield from _minibatches(labels.shape[0], batch_size, steps, rng)
        return
    batch_size = min(batch_size, labels.shape[0])
    n_anomalous = min(max(int(np.floor(share * batch_size + 0.5)), 1), batch_size - 1)
    normal_stream = _index_stream(normal, batch_size - n_anomalous, rng)
    anomalous_stream = _index_stream(anomalous, n_anomalous, rng)
    for _ in range(steps):
        yield np.concatenate([next(normal_stream), next(anomalous_stream)])


def _with_labels(z: np.ndarray, onehot: Optional[np.ndarray]) -> np.ndarray:
    return z if onehot is None else np.hstack([z, onehot])


def _check_loss(phase: str, step: int, loss: float):
    if not np.isfinite(loss):
        logger.error(f"Non-finite {phase} loss at step {step}: {loss}")
        raise TrainingDivergedError(phase, step, loss)


def _train(
    X: np.ndarray,
    labels: Optional[np.ndarray],
    cfg: AaeTrainConfig,
    prior: Prior,
    anomaly_prior: Optional[Prior],
    rng: np.random.Generator
) -> AaeModel:
    n = X.shape[0]
    if prior.dim != cfg.latent_dim:
        raise DimensionMismatchError(f"prior dim {prior.dim} != latent_dim {cfg.latent_dim}")

    model = build_aae(X.shape[1], cfg, prior, rng, anomaly_prior)
    encoder, decoder, disc = model.encoder, model.decoder, model.discriminator

    lr = cfg.lr if labels is None else cfg.labeled_lr
    ae_params = encoder.parameters() + decoder.parameters()
    ae_opt = AdamState.for_params(ae_params, lr=lr)
    disc_opt = AdamState.for_params(disc.parameters(), lr=lr)
    gen_opt = AdamState.for_params(encoder.parameters(), lr=lr)

    onehot_all = None
    if labels is not None:
        onehot_all = np.eye(cfg.label_width)[labels.astype(int)]

    steps = cfg.total_steps(n)
    history = TrainingHistory()
    log_every = max(steps // 10, 1)
    if labels is None:
        batches = _minibatches(n, cfg.batch_size, steps, rng)
    else:
        batches = _labeled_minibatches(labels, cfg.batch_size, cfg.anomaly_share, steps, rng)

    for step in tqdm(range(steps), desc="Training AAE", disable=not cfg.progress, leave=False):
        idx = next(batches)
        x = X[idx]
        b = x.shape[0]
        onehot = None if onehot_all is None else onehot_all[idx]

        # Reconstruction phase
        enc_acts = forward(encoder, x)
        dec_acts = forward(decoder, enc_acts[-1])
        recon_loss, grad = mse_loss(dec_acts[-1], x)
        _check_loss("reconstruction", step, recon_loss)
        dec_grads, dz = backward(decoder, dec_acts, grad)
        enc_grads, _ = backward(encoder, enc_acts, dz)
        adam_step(ae_params, enc_grads + dec_grads, ae_opt)

        # Discriminator phase
        z_fake = forward(encoder, x)[-1]
        z_real = prior.sample(b, rng)
        if labels is not None:
            z_anomalous = anomaly_prior.sample(b, rng)
            z_real = np.where(labels[idx, None] == 1, z_anomalous, z_real)
        disc_in = np.vstack([_with_labels(z_real, onehot), _with_labels(z_fake, onehot)])
        targets = np.vstack([np.ones((b, 1)), np.zeros((b, 1))])
        disc_acts = forward(disc, disc_in)
        disc_loss, grad = bce_logit_loss(disc_acts[-1], targets)
        _check_loss("discriminator", step, disc_loss)
        disc_grads, _ = backward(disc, disc_acts, grad)
        adam_step(disc.parameters(), disc_grads, disc_opt)

        # Generator phase
        enc_acts = forward(encoder, x)
        disc_acts = forward(disc, _with_labels(enc_acts[-1], onehot))
        gen_loss, grad = bce_logit_loss(disc_acts[-1], np.ones((b, 1)))
        _check_loss("generator", step, gen_loss)
        _, d_in = backward(disc, disc_acts, grad)
        enc_grads, _ = backward(encoder, enc_acts, d_in[:, :cfg.latent_dim])
        adam_step(encoder.parameters(), enc_grads, gen_opt)

        history.record(recon_loss, disc_loss, gen_loss)
        if step % log_every == 0 or step == steps - 1:
            logger.debug(
                f"step {step + 1}/{steps}: recon={recon_loss:.4f} "
                f"disc={disc_loss:.4f} gen={gen_loss:.4f}"
            )

    model.history = history
    return model


def train_unlabeled(
    train,
    cfg: AaeTrainConfig,
    prior: Prior,
    rng: Optional[np.random.Generator] = None
) -> AaeModel:
    """Train on all rows without labels so that q(z) matches ``prior``."""
    try:
        X = _features(train)
        rng = rng if rng is not None else make_rng(cfg.seed, "aae")
        if cfg.labeled:
            cfg = cfg.model_copy(update={"labeled": False, "label_width": 0})
        logger.info(
            f"🧠 Training unlabeled AAE on {X.shape[0]} rows "
            f"({cfg.total_steps(X.shape[0])} steps, hidden={cfg.hidden_units}, latent={cfg.latent_dim})"
        )
        model = _train(X, None, cfg, prior, None, rng)
        logger.info(f"✅ AAE trained: final reconstruction MSE {model.history.reconstruction[-1]:.4f}")
        return model

    except Exception as e:
        logger.error(f"Failed to train unlabeled AAE: {e}")
        raise


def train_labeled(
    train,
    labels,
    cfg: AaeTrainConfig,
    normal_prior: Prior,
    anomaly_prior: Optional[Prior] = None,
    rng: Optional[np.random.Generator] = None
) -> AaeModel:
    """Train with the one-hot label fed to the discriminator input.

    Normal rows are matched to ``normal_prior``, anomalous rows to
    ``anomaly_prior`` (a ring of radius 100 by default).
    """
    if not cfg.labeled:
        raise ValueError("train_labeled requires cfg.labeled = True")
    X = _features(train)
    if labels is None:
        labels = getattr(train, "y", None)
    if labels is None:
        raise InvalidLabelsError("labeled training needs labels")
    labels = np.asarray(labels).reshape(-1)
    if labels.shape[0] != X.shape[0]:
        raise InvalidLabelsError(f"{labels.shape[0]} labels for {X.shape[0]} rows")
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidLabelsError("labels must be 0 (normal) or 1 (anomaly)")

    if not np.any(labels == 1):
        logger.warning("All labels are normal; falling back to unlabeled training")
        return train_unlabeled(X, cfg, normal_prior, rng)

    anomaly_prior = anomaly_prior or RingPrior(cfg.latent_dim, 100.0)
    if anomaly_prior.dim != cfg.latent_dim:
        raise DimensionMismatchError(f"anomaly prior dim {anomaly_prior.dim} != latent_dim {cfg.latent_dim}")
    rng = rng if rng is not None else make_rng(cfg.seed, "aae")

    try:
        logger.info(
            f"🧠 Training labeled AAE on {X.shape[0]} rows "
            f"({int(labels.sum())} anomalous, {cfg.total_steps(X.shape[0])} steps, "
            f"lr={cfg.labeled_lr:g}, anomaly share {cfg.anomaly_share:g})"
        )
        model = _train(X, labels, cfg, normal_prior, anomaly_prior, rng)
        logger.info(f"✅ Labeled AAE trained: final reconstruction MSE {model.history.reconstruction[-1]:.4f}")
        return model

    except Exception as e:
        logger.error(f"Failed to train labeled AAE: {e}")
        raise


@dataclass(frozen=True)
class AaeSetup:
    """Training config plus the priors it trains against."""
    config: AaeTrainConfig
    prior: Prior
    anomaly_prior: Optional[Prior] = None

    def train(self, train, seed: Optional[int] = None) -> AaeModel:
        """Train for ``seed`` (default ``config.seed``); labeled when configured and labels exist."""
        seed = self.config.seed if seed is None else seed
        cfg = self.config.model_copy(update={"seed": seed})
        rng = make_rng(seed, "aae")
        labels = getattr(train, "y", None)
        if cfg.labeled and labels is not None:
            return train_labeled(train, labels, cfg, self.prior, self.anomaly_prior, rng)
        if cfg.labeled:
            logger.warning("Labeled training requested without labels; training unlabeled")
        return train_unlabeled(train, cfg, self.prior, rng)


def encode(model: AaeModel, X) -> np.ndarray:
    """Z = E(X)."""
    X = as_matrix(X, name="X")
    if X.shape[1] != model.input_dim:
        raise DimensionMismatchError(f"X has {X.shape[1]} columns, model expects {model.input_dim}")
    return forward(model.encoder, X)[-1]


def decode(model: AaeModel, Z) -> np.ndarray:
    """X' = D(Z)."""
    Z = as_matrix(Z, name="Z")
    if Z.shape[1] != model.latent_dim:
        raise DimensionMismatchError(f"Z has {Z.shape[1]} columns, model expects {model.latent_dim}")
    return forward(model.decoder, Z)[-1]


def reconstruction_error(model: AaeModel, X) -> float:
    """MSE of D(E(X)) against X."""
    X = as_matrix(X, name="X")
    loss, _ = mse_loss(decode(model, encode(model, X)), X)
    return loss


def discriminator_accuracy(
    model: AaeModel,
    X,
    rng: np.random.Generator,
    labels: Optional[np.ndarray] = None
) -> float:
    """Accuracy on fresh prior draws (class 1) against encodings of X (class 0).

    Near 0.5 means the encoder's aggregated posterior fools the discriminator.
    """
    z_fake = encode(model, X)
    n = z_fake.shape[0]
    z_real = model.prior.sample(n, rng)
    onehot = None
    if model.labeled:
        labels = np.zeros(n, dtype=int) if labels is None else np.asarray(labels, dtype=int)
        onehot = np.eye(model.label_width)[labels]
        if model.anomaly_prior is not None:
            z_real = np.where(labels[:, None] == 1, model.anomaly_prior.sample(n, rng), z_real)
    real_logits = forward(model.discriminator, _with_labels(z_real, onehot))[-1]
    fake_logits = forward(model.discriminator, _with_labels(z_fake, onehot))[-1]
    correct = np.sum(real_logits > 0) + np.sum(fake_logits <= 0)
    return float(correct / (2 * n))
