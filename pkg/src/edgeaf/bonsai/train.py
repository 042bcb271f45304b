"""Joint gradient training of projection, node predictors and branch vectors.

Training replaces the hard path with a soft one: the indicator of node ``k``
is the product, over its ancestors, of ``sigmoid(T * theta_j @ z)`` (left
turn) or ``1 - sigmoid(T * theta_j @ z)`` (right turn). The temperature
``T`` grows geometrically from ``temp_start`` to ``temp_end`` so the soft
tree converges to the hard tree used at inference.

The objective is the mean squared hinge ``max(0, 1 - y * score)**2`` with
``y`` in {-1, +1}, plus L2 penalties. Sparsity budgets are enforced by
iterative hard thresholding: dense warm-up epochs, hard thresholding after
every following epoch, then a few epochs with the support frozen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DivergenceError, TrainingError
from .model import BonsaiModel, n_internal, n_nodes

PARAMS = ("Z", "proj_bias", "W", "V", "theta")
SPARSE_PARAMS = ("Z", "W", "V", "theta")


@dataclass(frozen=True)
class TrainConfig:
    depth: int = 2
    d_proj: int = 8
    budget_z: float = 0.5
    budget_w: float = 1.0
    budget_v: float = 1.0
    budget_theta: float = 1.0
    sigma: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 60
    batch_size: int = 64
    warmup_epochs: int = 10
    retrain_epochs: int = 10
    reg_z: float = 1e-4
    reg_w: float = 1e-4
    reg_v: float = 1e-4
    reg_theta: float = 1e-4
    temp_start: float = 1.0
    temp_end: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0 or self.d_proj < 1:
            raise ConfigError("depth must be >= 0 and d_proj >= 1")
        for name in ("budget_z", "budget_w", "budget_v", "budget_theta"):
            b = getattr(self, name)
            if not 0 < b <= 1:
                raise ConfigError(f"{name}={b} must lie in (0, 1]")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.warmup_epochs < 0 or self.retrain_epochs < 0:
            raise ConfigError("warmup_epochs and retrain_epochs must be >= 0")
        if self.learning_rate <= 0 or self.temp_start <= 0 or self.temp_end <= 0:
            raise ConfigError("learning_rate and temperatures must be positive")

    def budget(self, param):
        return {"Z": self.budget_z, "W": self.budget_w, "V": self.budget_v,
                "theta": self.budget_theta}[param]

    def reg(self, param):
        return {"Z": self.reg_z, "W": self.reg_w, "V": self.reg_v,
                "theta": self.reg_theta, "proj_bias": 0.0}[param]


def keep_count(size, budget):
    """Number of entries kept under a budget: ``ceil(budget * size)``."""
    return min(size, int(math.ceil(budget * size - 1e-9)))


def hard_threshold(a, k):
    """Zero all but the ``k`` largest-magnitude entries (stable on ties)."""
    flat = a.reshape(-1)
    if k >= flat.size:
        return np.ones(a.shape, dtype=bool)
    order = np.argsort(-np.abs(flat), kind="stable")
    mask = np.zeros(flat.size, dtype=bool)
    mask[order[:k]] = True
    return mask.reshape(a.shape)


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def soft_scores(params, X, temperature, sigma, depth):
    """Soft-path scores plus the intermediates needed for backprop."""
    z = X @ params["Z"].T + params["proj_bias"]
    A = z @ params["W"].T
    Tt = np.tanh(sigma * (z @ params["V"].T))
    G = A * Tt
    n_int = n_internal(depth)
    S = _sigmoid(temperature * (z @ params["theta"].T)) if n_int else np.zeros((X.shape[0], 0))
    N = n_nodes(depth)
    ind = np.empty((X.shape[0], N))
    ind[:, 0] = 1.0
    for j in range(n_int):
        ind[:, 2 * j + 1] = ind[:, j] * S[:, j]
        ind[:, 2 * j + 2] = ind[:, j] * (1.0 - S[:, j])
    # subtree value below (and including) each node, per unit indicator
    down = G.copy()
    for j in reversed(range(n_int)):
        down[:, j] = G[:, j] + S[:, j] * down[:, 2 * j + 1] + (1.0 - S[:, j]) * down[:, 2 * j + 2]
    cache = dict(z=z, A=A, Tt=Tt, S=S, ind=ind, down=down)
    return down[:, 0], cache


def loss_and_grad(params, X, y, temperature, sigma, depth, regs):
    """Objective value and analytic gradient for one batch.

    ``y`` holds -1/+1 targets; ``regs`` maps parameter name to L2 weight.
    """
    score, c = soft_scores(params, X, temperature, sigma, depth)
    B = X.shape[0]
    margin = np.maximum(0.0, 1.0 - y * score)
    loss = float(np.mean(margin * margin))
    delta = -2.0 * y * margin / B

    z, A, Tt, S, ind, down = c["z"], c["A"], c["Tt"], c["S"], c["ind"], c["down"]
    dG = delta[:, None] * ind
    dA = dG * Tt
    dVz = dG * A * sigma * (1.0 - Tt * Tt)
    grads = {"W": dA.T @ z, "V": dVz.T @ z}
    dz = dA @ params["W"] + dVz @ params["V"]
    n_int = n_internal(depth)
    if n_int:
        left = down[:, 1:2 * n_int:2]
        right = down[:, 2:2 * n_int + 1:2]
        dU = delta[:, None] * ind[:, :n_int] * (left - right) * S * (1.0 - S) * temperature
        grads["theta"] = dU.T @ z
        dz += dU @ params["theta"]
    else:
        grads["theta"] = np.zeros_like(params["theta"])
    grads["Z"] = dz.T @ X
    grads["proj_bias"] = dz.sum(axis=0)

    for name in PARAMS:
        lam = regs.get(name, 0.0)
        if lam:
            p = params[name]
            loss += lam * float(np.sum(p * p))
            grads[name] = grads[name] + 2.0 * lam * p
    return loss, grads


def init_params(d_in, cfg: TrainConfig, rng):
    D, N, M = cfg.d_proj, n_nodes(cfg.depth), n_internal(cfg.depth)
    return {
        "Z": rng.normal(0.0, 1.0 / math.sqrt(d_in), (D, d_in)),
        "proj_bias": rng.normal(0.0, 0.1, D),
        "W": rng.normal(0.0, 1.0 / math.sqrt(D), (N, D)),
        "V": rng.normal(0.0, 1.0 / math.sqrt(D), (N, D)),
        "theta": rng.normal(0.0, 1.0 / math.sqrt(D), (M, D)),
    }


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def standardization(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    # store on the float32 grid so the stored model reproduces training inputs
    return mean.astype(np.float32).astype(np.float64), scale.astype(np.float32).astype(np.float64)


def train(X, y, cfg: TrainConfig = None, feature_names=None, callback=None) -> BonsaiModel:
    """Fit a model on raw (unstandardized) features ``X`` and 0/1 labels ``y``.

    ``callback(epoch, loss, temperature)`` is invoked after every epoch.
    Deterministic for a fixed ``cfg.seed``.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError(f"X shape {X.shape} incompatible with {y.shape[0]} labels")
    if np.unique(y).size < 2:
        raise TrainingError("training data must contain both classes")
    if not np.isfinite(X).all():
        raise TrainingError("training features contain non-finite values")
    n, d_in = X.shape
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(d_in))
    mean, scale = standardization(X)
    Xs = (X - mean) / scale
    target = np.where(y > 0, 1.0, -1.0)

    rng = np.random.default_rng(cfg.seed)
    params = init_params(d_in, cfg, rng)
    opt = _Adam(params, cfg.learning_rate)
    regs = {name: cfg.reg(name) for name in PARAMS}
    masks = None
    frozen_from = max(cfg.warmup_epochs, cfg.epochs - cfg.retrain_epochs)

    # overflow is caught below and reported as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            frac = epoch / max(1, cfg.epochs - 1)
            temperature = cfg.temp_start * (cfg.temp_end / cfg.temp_start) ** frac
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                loss, grads = loss_and_grad(params, Xs[idx], target[idx], temperature,
                                            cfg.sigma, cfg.depth, regs)
                if not math.isfinite(loss):
                    raise DivergenceError(epoch, loss)
                if masks is not None:
                    for name, m in masks.items():
                        grads[name] = grads[name] * m
                opt.step(params, grads)
                if masks is not None:
                    for name, m in masks.items():
                        params[name] *= m
                total += loss * idx.size
            mean_loss = total / n
            if not math.isfinite(mean_loss) or not all(np.isfinite(p).all() for p in params.values()):
                raise DivergenceError(epoch, mean_loss)
            if epoch + 1 >= cfg.warmup_epochs and masks is None:
                support = {}
                for name in SPARSE_PARAMS:
                    k = keep_count(params[name].size, cfg.budget(name))
                    support[name] = hard_threshold(params[name], k)
                    params[name] *= support[name]
                if epoch + 1 >= frozen_from:
                    masks = support
            if callback is not None:
                callback(epoch, mean_loss, temperature)

    # final projection onto the budgets (a no-op unless warm-up covered every epoch)
    for name in SPARSE_PARAMS:
        k = keep_count(params[name].size, cfg.budget(name))
        params[name] *= hard_threshold(params[name], k)

    return BonsaiModel(
        depth=cfg.depth,
        Z=params["Z"],
        proj_bias=params["proj_bias"],
        W=params["W"],
        V=params["V"],
        theta=params["theta"],
        sigma=cfg.sigma,
        mean=mean,
        scale=scale,
        feature_subset=tuple(feature_names),
    )
