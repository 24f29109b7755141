"""Conditional flow matching on the flat p-coordinates.

The probability path is the straight-line interpolant X_t = (1-t) X_0 + t X_1
whose conditional field (x1 - x)/(1-t) reduces identically to x1 - x0 along
the path; the loss regresses u_theta(x_t, t) onto that target. Training draws
t uniformly on [0, 1 - t_epsilon] since the conditional field is singular at
t = 1.

Every training step re-derives its randomness from (seed, step) so runs can
be resumed mid-stream and replayed bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import AdamWState, adamw_step


class NonFiniteLossError(RuntimeError):
    """Loss became NaN/Inf; carries the failing step for diagnostics."""

    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss!r} at step {step}")
        self.step = step
        self.loss = loss


@dataclass(frozen=True)
class NoiseSpec:
    """Centered diagonal Gaussian base distribution on p."""

    dim: int
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        quad = np.sum(x * x, axis=-1) / (2.0 * self.sigma**2)
        return -0.5 * self.dim * np.log(2.0 * np.pi * self.sigma**2) - quad


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 512
    steps: int = 50_000
    eval_every: int = 100
    lr: float = 1e-4
    weight_decay: float = 1e-5
    seed: int = 0
    t_epsilon: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.t_epsilon < 0.5:
            raise ValueError("t_epsilon must lie in [0, 0.5)")
        if self.batch_size < 1 or self.eval_every < 1:
            raise ValueError("batch_size and eval_every must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


def _step_rng(seed, step):
    return np.random.default_rng(np.random.SeedSequence((seed, step)))


def sample_noise(spec, count):
    """count i.i.d. N(0, sigma^2 I) rows; identical for identical spec."""
    rng = np.random.default_rng(spec.seed)
    return rng.normal(0.0, spec.sigma, size=(count, spec.dim))


def interpolate(x0, x1, t):
    """Return (x_t, target) with x_t = (1-t) x0 + t x1 and target = x1 - x0.

    The simplified target equals (x1 - x_t)/(1 - t) identically.
    """
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if x0.shape != x1.shape:
        raise ValueError("x0 and x1 must have matching shapes")
    t = np.asarray(t, dtype=float)
    tb = t[..., None] if t.ndim == 1 else t
    x_t = (1.0 - tb) * x0 + tb * x1
    return x_t, x1 - x0


def cfm_loss(model, x0, x1, t):
    """Mean squared norm of u_theta(x_t, t) minus the conditional target."""
    x_t, target = interpolate(x0, x1, t)
    u = model.forward(x_t, t)
    diff = u - target
    return float(np.mean(np.sum(diff * diff, axis=-1)))


def cfm_loss_and_grad(model, x0, x1, t):
    x_t, target = interpolate(x0, x1, t)
    u, cache = model.forward_cached(x_t, t)
    diff = u - target
    loss = float(np.mean(np.sum(diff * diff, axis=-1)))
    grad_out = (2.0 / diff.shape[0]) * diff
    return loss, model.backward_from_cache(cache, grad_out)


def train(model, dataset, noise, cfg, start_step=0, callback=None):
    """Train in place; returns the loss history as a list of (step, loss).

    Each step samples x1 from the dataset with replacement, x0 from the noise
    spec, and t ~ U[0, 1 - t_epsilon]; then one AdamW update. Losses are
    recorded every eval_every steps (and at the final step). Raises
    NonFiniteLossError if the loss leaves the reals.
    """
    dataset = np.asarray(dataset, dtype=float)
    if dataset.ndim != 2 or dataset.shape[0] == 0:
        raise ValueError("dataset must be a nonempty 2-d array")
    if dataset.shape[1] != noise.dim:
        raise ValueError(f"dataset dim {dataset.shape[1]} != noise dim {noise.dim}")

    opt = AdamWState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    history = []
    n = dataset.shape[0]
    for step in range(start_step, cfg.steps):
        rng_batch = _step_rng(cfg.seed, step)
        idx = rng_batch.integers(0, n, size=cfg.batch_size)
        t = rng_batch.uniform(0.0, 1.0 - cfg.t_epsilon, size=cfg.batch_size)
        rng_noise = _step_rng(noise.seed, step)
        x0 = rng_noise.normal(0.0, noise.sigma, size=(cfg.batch_size, noise.dim))
        x_t, target = interpolate(x0, dataset[idx], t)
        u, cache = model.forward_cached(x_t, t)
        diff = u - target
        loss = float(np.mean(np.sum(diff * diff, axis=-1)))
        if not np.isfinite(loss):
            raise NonFiniteLossError(step, loss)
        grads = model.backward_from_cache(cache, (2.0 / cfg.batch_size) * diff)
        adamw_step(opt, model.params, grads)
        if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.steps:
            history.append((step + 1, loss))
            if callback is not None:
                callback(step + 1, loss)
    return history
