"""From-scratch multi-modal classifier: per-modality encoders, concatenation
fusion, softmax cross-entropy, and hand-written gradients.

Everything is float64 numpy, single-threaded and deterministic, so runs
are exactly reproducible and analytic gradients can be checked against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ModelConfig:
    encoder: str = "linear"  # "linear" | "mlp"
    embed_dim: int = 16
    hidden_dim: int = 32
    activation: str = "tanh"  # "tanh" | "relu"
    unimodal_heads: bool = False

    def __post_init__(self):
        if self.encoder not in ("linear", "mlp"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")


def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    batch = logits.shape[0]
    loss = -log_probs[np.arange(batch), labels].mean()
    grad = np.exp(log_probs)
    grad[np.arange(batch), labels] -= 1.0
    return float(loss), grad / batch


class MultiModalNet:
    """Encoders + concatenation fusion + linear classifier.

    Parameters live in a flat name -> array dict so the optimizer, the
    modulation hooks, and the finite-difference checker can all address
    them uniformly. Optional per-modality linear heads support blended
    uni-modal losses.
    """

    def __init__(
        self,
        config: ModelConfig,
        feature_dims: Sequence[int],
        num_classes: int,
        seed: int = 0,
    ):
        self.config = config
        self.feature_dims = tuple(feature_dims)
        self.num_classes = num_classes
        self.n_modalities = len(feature_dims)
        rng = np.random.default_rng(seed)
        p: dict[str, np.ndarray] = {}
        for i, dim in enumerate(self.feature_dims):
            if config.encoder == "mlp":
                p[f"enc{i}_W1"] = _uniform_init(rng, dim, (dim, config.hidden_dim))
                p[f"enc{i}_b1"] = _uniform_init(rng, dim, config.hidden_dim)
                p[f"enc{i}_W2"] = _uniform_init(
                    rng, config.hidden_dim, (config.hidden_dim, config.embed_dim)
                )
                p[f"enc{i}_b2"] = _uniform_init(rng, config.hidden_dim, config.embed_dim)
            else:
                p[f"enc{i}_W1"] = _uniform_init(rng, dim, (dim, config.embed_dim))
                p[f"enc{i}_b1"] = _uniform_init(rng, dim, config.embed_dim)
        fused = config.embed_dim * self.n_modalities
        p["fuse_W"] = _uniform_init(rng, fused, (fused, num_classes))
        p["fuse_b"] = _uniform_init(rng, fused, num_classes)
        if config.unimodal_heads:
            for i in range(self.n_modalities):
                p[f"head{i}_W"] = _uniform_init(
                    rng, config.embed_dim, (config.embed_dim, num_classes)
                )
                p[f"head{i}_b"] = _uniform_init(rng, config.embed_dim, num_classes)
        self.params = p

    def _activate(self, z: np.ndarray) -> np.ndarray:
        return np.tanh(z) if self.config.activation == "tanh" else np.maximum(z, 0.0)

    def _encode(self, features: Sequence[np.ndarray]):
        embeds, caches = [], []
        for i, x in enumerate(features):
            z = x @ self.params[f"enc{i}_W1"] + self.params[f"enc{i}_b1"]
            if self.config.encoder == "mlp":
                h = self._activate(z)
                e = h @ self.params[f"enc{i}_W2"] + self.params[f"enc{i}_b2"]
                caches.append((x, z, h))
            else:
                e = z
                caches.append((x, None, None))
            embeds.append(e)
        return embeds, caches

    def forward(self, features: Sequence[np.ndarray]) -> np.ndarray:
        embeds, _ = self._encode(features)
        fused = np.concatenate(embeds, axis=1)
        return fused @ self.params["fuse_W"] + self.params["fuse_b"]

    def unimodal_logits(self, features: Sequence[np.ndarray]) -> list[np.ndarray]:
        if not self.config.unimodal_heads:
            raise ValueError("model built without uni-modal heads")
        embeds, _ = self._encode(features)
        return [
            e @ self.params[f"head{i}_W"] + self.params[f"head{i}_b"]
            for i, e in enumerate(embeds)
        ]

    def predict(self, features: Sequence[np.ndarray]) -> np.ndarray:
        # argmax takes the lowest index on ties
        return np.argmax(self.forward(features), axis=1)

    def loss(
        self,
        features: Sequence[np.ndarray],
        labels: np.ndarray,
        loss_weights: tuple[float, ...] | None = None,
    ) -> float:
        embeds, _ = self._encode(features)
        fused = np.concatenate(embeds, axis=1)
        logits = fused @ self.params["fuse_W"] + self.params["fuse_b"]
        joint, _ = softmax_cross_entropy(logits, labels)
        if loss_weights is None:
            return joint
        total = loss_weights[0] * joint
        for i, e in enumerate(embeds):
            head = e @ self.params[f"head{i}_W"] + self.params[f"head{i}_b"]
            li, _ = softmax_cross_entropy(head, labels)
            total += loss_weights[1 + i] * li
        return total

    def loss_and_grads(
        self,
        features: Sequence[np.ndarray],
        labels: np.ndarray,
        loss_weights: tuple[float, ...] | None = None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Loss and analytic gradients for every parameter.

        ``loss_weights`` blends the joint loss with per-modality head
        losses as (w_joint, w_0, ..., w_{n-1}); None means joint only.
        """
        embeds, caches = self._encode(features)
        fused = np.concatenate(embeds, axis=1)
        logits = fused @ self.params["fuse_W"] + self.params["fuse_b"]
        joint_loss, dlogits = softmax_cross_entropy(logits, labels)
        grads: dict[str, np.ndarray] = {}
        w_joint = 1.0 if loss_weights is None else loss_weights[0]
        total = w_joint * joint_loss
        grads["fuse_W"] = w_joint * (fused.T @ dlogits)
        grads["fuse_b"] = w_joint * dlogits.sum(axis=0)
        dfused = w_joint * (dlogits @ self.params["fuse_W"].T)
        d_embeds = np.split(dfused, self.n_modalities, axis=1)
        d_embeds = [d.copy() for d in d_embeds]
        if loss_weights is not None:
            for i, e in enumerate(embeds):
                head = e @ self.params[f"head{i}_W"] + self.params[f"head{i}_b"]
                head_loss, dhead = softmax_cross_entropy(head, labels)
                w = loss_weights[1 + i]
                total += w * head_loss
                grads[f"head{i}_W"] = w * (e.T @ dhead)
                grads[f"head{i}_b"] = w * dhead.sum(axis=0)
                d_embeds[i] += w * (dhead @ self.params[f"head{i}_W"].T)
        for i, de in enumerate(d_embeds):
            x, z, h = caches[i]
            if self.config.encoder == "mlp":
                grads[f"enc{i}_W2"] = h.T @ de
                grads[f"enc{i}_b2"] = de.sum(axis=0)
                dh = de @ self.params[f"enc{i}_W2"].T
                if self.config.activation == "tanh":
                    dz = dh * (1.0 - h * h)
                else:
                    dz = dh * (z > 0)
                grads[f"enc{i}_W1"] = x.T @ dz
                grads[f"enc{i}_b1"] = dz.sum(axis=0)
            else:
                grads[f"enc{i}_W1"] = x.T @ de
                grads[f"enc{i}_b1"] = de.sum(axis=0)
        return float(total), grads

    # Flat views keep finite-difference checks simple.
    def param_names(self) -> list[str]:
        return sorted(self.params)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self.param_names()])

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for k in self.param_names():
            size = self.params[k].size
            self.params[k] = flat[offset : offset + size].reshape(self.params[k].shape)
            offset += size

    def flatten_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[k].ravel() for k in self.param_names()])


class SGDMomentum:
    """Classic momentum: v <- mu * v + g; p <- p - lr * v."""

    def __init__(self, params: dict[str, np.ndarray], lr: float, momentum: float):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray], lr_scale: float = 1.0) -> None:
        for name, grad in grads.items():
            v = self.velocity[name]
            v *= self.momentum
            v += grad
            self.params[name] -= self.lr * lr_scale * v
