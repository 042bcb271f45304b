"""Shallow sparse tree over a learned low-dimensional projection.

Nodes are stored breadth-first: node ``k`` has children ``2k+1`` (left) and
``2k+2`` (right). A tree of depth ``h`` has ``2**(h+1) - 1`` nodes, of which
the first ``2**h - 1`` are internal.

For an input ``x`` the model computes ``z = Z @ ((x - mean) / scale) + b``
and walks one root-to-leaf path, going left at internal node ``k`` iff
``theta[k] @ z > 0``. The score is the sum over the path of
``(W[k] @ z) * tanh(sigma * V[k] @ z)``; the label is AF iff ``score > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ValidationError
from ..ingest import Rhythm


def n_nodes(depth):
    return 2 ** (depth + 1) - 1


def n_internal(depth):
    return 2 ** depth - 1


def _f32(a):
    # parameters live on the float32 grid so serialization is lossless;
    # adding +0.0 turns -0.0 into +0.0, which the sparse encoding cannot keep
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32) + np.float32(0.0),
                                dtype=np.float64)


@dataclass(eq=False)
class BonsaiModel:
    depth: int
    Z: np.ndarray
    proj_bias: np.ndarray
    W: np.ndarray
    V: np.ndarray
    theta: np.ndarray
    sigma: float
    mean: np.ndarray
    scale: np.ndarray
    feature_subset: Tuple[str, ...]

    def __post_init__(self):
        self.depth = int(self.depth)
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")
        self.Z = _f32(self.Z)
        if self.Z.ndim != 2:
            raise ValidationError("Z must be a (d_proj, d_in) matrix")
        d_proj, d_in = self.Z.shape
        if d_proj < 1 or d_in < 1:
            raise ValidationError(f"Z shape {self.Z.shape} must be at least 1x1")
        self.proj_bias = _f32(self.proj_bias).reshape(-1)
        self.W = _f32(self.W).reshape(-1, d_proj)
        self.V = _f32(self.V).reshape(-1, d_proj)
        self.theta = _f32(self.theta).reshape(-1, d_proj)
        self.sigma = float(np.float32(self.sigma))
        self.mean = _f32(self.mean).reshape(-1)
        self.scale = _f32(self.scale).reshape(-1)
        self.feature_subset = tuple(self.feature_subset)
        expect = {
            "proj_bias": (self.proj_bias.shape, (d_proj,)),
            "W": (self.W.shape, (n_nodes(self.depth), d_proj)),
            "V": (self.V.shape, (n_nodes(self.depth), d_proj)),
            "theta": (self.theta.shape, (n_internal(self.depth), d_proj)),
            "mean": (self.mean.shape, (d_in,)),
            "scale": (self.scale.shape, (d_in,)),
        }
        for name, (got, want) in expect.items():
            if got != want:
                raise ValidationError(f"{name} has shape {got}, expected {want}")
        if len(self.feature_subset) != d_in:
            raise ValidationError(
                f"{len(self.feature_subset)} feature names for d_in={d_in}")
        if np.any(self.scale == 0):
            raise ValidationError("standardization scale must be non-zero")

    @property
    def d_proj(self):
        return self.Z.shape[0]

    @property
    def d_in(self):
        return self.Z.shape[1]

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d_in:
            raise ValidationError(
                f"input has {x.shape[-1]} features, model expects {self.d_in}")
        return ((x - self.mean) / self.scale) @ self.Z.T + self.proj_bias

    def score(self, x) -> float:
        z = self.project(x)
        W, V, theta, sigma = self.W, self.V, self.theta, self.sigma
        k = 0
        total = 0.0
        for level in range(self.depth + 1):
            total += float(W[k] @ z) * math.tanh(sigma * float(V[k] @ z))
            if level < self.depth:
                # ties go right
                k = 2 * k + 1 if float(theta[k] @ z) > 0.0 else 2 * k + 2
        return total

    def predict(self, x):
        s = self.score(x)
        return s, Rhythm.AF if s > 0.0 else Rhythm.NON_AF

    def scores(self, X):
        """Hard-path scores for a batch of inputs, shape ``(n, d_in)``."""
        z = self.project(np.atleast_2d(X))
        n = z.shape[0]
        node = np.zeros(n, dtype=np.int64)
        total = np.zeros(n)
        for level in range(self.depth + 1):
            w = np.einsum("nd,nd->n", z, self.W[node])
            v = np.einsum("nd,nd->n", z, self.V[node])
            total += w * np.tanh(self.sigma * v)
            if level < self.depth:
                go_left = np.einsum("nd,nd->n", z, self.theta[node]) > 0.0
                node = np.where(go_left, 2 * node + 1, 2 * node + 2)
        return total

    def predict_labels(self, X):
        return (self.scores(X) > 0.0).astype(np.int8)

    def nnz(self):
        return {name: int(np.count_nonzero(getattr(self, name)))
                for name in ("Z", "proj_bias", "W", "V", "theta")}


def predict(model: BonsaiModel, x):
    """``(score, label)`` for one feature vector in ``model.feature_subset`` order."""
    return model.predict(x)
