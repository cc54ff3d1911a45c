"""Denoising score matching against exact forward samples.

Each minibatch draws a fresh time per example uniformly on [t_min, T]
(realizing the flat 1/T loss weighting up to a constant), pushes the data
point through the exact forward transition, and regresses the network on
the conditional score evaluated from the kernel table.
"""

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, TrainingDiverged
from .kernels import conditional_score_batch
from .levy_noise import sample_increments
from .score_model import init_params, init_optimizer, loss_and_grad, optimizer_step
from .special_math import derive_rng


@dataclass
class TrainConfig:
    n_train: int = 32000
    batch_size: int = 256
    n_epochs: int = 100
    seed: int = 2718281828

    def __post_init__(self):
        if self.n_train < 1 or self.batch_size < 1 or self.n_epochs < 0:
            raise ConfigError("n_train and batch_size must be positive, n_epochs >= 0")
        if self.batch_size > self.n_train:
            raise ConfigError("batch_size must not exceed n_train")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrainHistory:
    epoch_loss: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.epoch_loss[-1] if self.epoch_loss else None

    def to_dict(self):
        return {
            "epoch_loss": self.epoch_loss,
            "epoch_seconds": self.epoch_seconds,
            "final_loss": self.final_loss,
        }


def sample_forward_state(y0, t, cfg, rng, size=None):
    """Exact forward transition y0 -> y at time t (no discretization).

    y0 may be a single vector or an (n, d) batch; t a scalar or per-row
    array.  Returns matching shape.
    """
    y0 = np.asarray(y0, dtype=np.float64)
    single = y0.ndim == 1
    yb = y0[None, :] if single else y0
    n = yb.shape[0] if size is None else int(size)
    if single and size is not None:
        yb = np.broadcast_to(yb, (n, y0.shape[0]))
    t_arr = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    if np.any(t_arr <= 0.0):
        raise ValueError("t must be positive")
    gauss, jump = sample_increments(t_arr, "-", cfg, rng, n)
    out = yb * np.exp(-0.5 * t_arr)[:, None] + gauss + jump
    return out[0] if single and size is None else out


def dsm_minibatch(params, batch_y0, table, cfg, rng):
    """Loss and gradients of one denoising-score-matching minibatch."""
    batch_y0 = np.asarray(batch_y0, dtype=np.float64)
    if batch_y0.ndim != 2 or batch_y0.shape[0] < 1:
        raise ValueError("batch must be a non-empty (n, d) array")
    n = batch_y0.shape[0]
    t = rng.uniform(cfg.t_min, cfg.T, n)
    y = sample_forward_state(batch_y0, t, cfg, rng)
    targets = conditional_score_batch(y, batch_y0, t, table)
    return loss_and_grad(params, y, t, targets)


def train(dataset, cfg, tcfg, table, progress=None):
    """Shuffled minibatch optimization; deterministic under tcfg.seed.

    Returns (params, TrainHistory).  Raises TrainingDiverged on a non-finite
    loss, reporting the epoch and batch index.
    """
    dataset = np.asarray(dataset, dtype=np.float64)
    if dataset.ndim != 2 or dataset.shape[1] != cfg.d:
        raise ConfigError(f"dataset must be (n, {cfg.d}), got {dataset.shape}")
    if dataset.shape[0] != tcfg.n_train:
        raise ConfigError(
            f"dataset size {dataset.shape[0]} does not match n_train={tcfg.n_train}"
        )
    params = init_params(cfg, derive_rng(tcfg.seed, 0).integers(2**63))
    state = init_optimizer(params)
    rng = derive_rng(tcfg.seed, 1)
    history = TrainHistory()
    n = dataset.shape[0]
    for epoch in range(tcfg.n_epochs):
        tic = time.perf_counter()
        perm = rng.permutation(n)
        losses = []
        for bi, start in enumerate(range(0, n, tcfg.batch_size)):
            batch = dataset[perm[start : start + tcfg.batch_size]]
            loss, grads = dsm_minibatch(params, batch, table, cfg, rng)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, bi, loss)
            params, state = optimizer_step(params, grads, state)
            losses.append(loss)
        history.epoch_loss.append(float(np.mean(losses)))
        history.epoch_seconds.append(time.perf_counter() - tic)
        if progress is not None:
            progress(epoch, history.epoch_loss[-1])
    return params, history
