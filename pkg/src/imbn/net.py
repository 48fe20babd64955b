"""Dense blocks with batch normalization, in standard and weighted modes.

Each block applies a bias-free affine map, normalizes every unit's signal
over the mini-batch, rescales by a learned gamma, then applies the
activation to (bias + normalized signal). In weighted mode the batch mean
and variance are taken under per-sample weights w with normalizer
Z = sum(w), so the statistics see the same effective sample importances as
a weighted loss; the variance denominator is Z - 1, the weighted analogue
of the unbiased |B| - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BatchTooSmallError,
    DegenerateWeightMassError,
    StatsUnpopulatedError,
)
from .optim import xavier_init

LOG_FLOOR = 1e-12


@dataclass
class DenseLayer:
    W: np.ndarray  # (h_out, h_in)
    b: np.ndarray  # (h_out,), added inside the activation after normalization


@dataclass
class BatchNormLayer:
    gamma: np.ndarray  # (h_out,) learned scale
    epsilon: float = 1e-8
    mode: str = "standard"  # "standard" | "weighted", fixed for the layer's lifetime
    inference_mean: np.ndarray | None = None
    inference_var: np.ndarray | None = None
    stat_count: int = 0


@dataclass
class Block:
    dense: DenseLayer
    bn: BatchNormLayer
    activation: str  # "relu" | "softmax"


@dataclass
class Network:
    blocks: list

    def parameters(self) -> dict:
        """Learned parameters keyed W1, b1, gamma1, W2, ... in block order."""
        params = {}
        for i, blk in enumerate(self.blocks, start=1):
            params[f"W{i}"] = blk.dense.W
            params[f"b{i}"] = blk.dense.b
            params[f"gamma{i}"] = blk.bn.gamma
        return params

    def set_parameters(self, params: dict) -> None:
        for i, blk in enumerate(self.blocks, start=1):
            blk.dense.W = np.asarray(params[f"W{i}"], dtype=float)
            blk.dense.b = np.asarray(params[f"b{i}"], dtype=float)
            blk.bn.gamma = np.asarray(params[f"gamma{i}"], dtype=float)


@dataclass
class BlockCache:
    z_in: np.ndarray  # block input (batch, h_in)
    lam: np.ndarray  # bias-free affine signals (batch, h_out)
    mean: np.ndarray  # batch statistic used for normalization
    var: np.ndarray
    inv_std: np.ndarray  # 1 / sqrt(var + epsilon)
    x_hat: np.ndarray  # normalized signal before gamma
    u_hat: np.ndarray  # gamma * x_hat
    z_out: np.ndarray  # activation output


@dataclass
class ForwardCache:
    blocks: list
    w: np.ndarray  # per-sample weights of the batch
    z_total: float  # sum of batch weights (= batch size at unit weights)


def build_network(n_in, n_hidden, n_out, mode="standard", epsilon=1e-8, rng=None):
    """Two-block network: relu hidden block, softmax output block.

    Weights are Xavier-initialized, biases zero, gammas one.
    """
    rng = np.random.default_rng() if rng is None else rng
    blocks = []
    for fan_in, fan_out, act in ((n_in, n_hidden, "relu"), (n_hidden, n_out, "softmax")):
        blocks.append(
            Block(
                dense=DenseLayer(W=xavier_init(fan_in, fan_out, rng), b=np.zeros(fan_out)),
                bn=BatchNormLayer(gamma=np.ones(fan_out), epsilon=epsilon, mode=mode),
                activation=act,
            )
        )
    return Network(blocks=blocks)


def dense_forward(layer: DenseLayer, z_prev: np.ndarray) -> np.ndarray:
    """Bias-free affine signals: row mu is W @ z_prev[mu]."""
    z_prev = np.asarray(z_prev, dtype=float)
    if z_prev.ndim != 2 or z_prev.shape[1] != layer.W.shape[1]:
        raise ValueError(
            f"expected (batch, {layer.W.shape[1]}) input, got {z_prev.shape}"
        )
    return z_prev @ layer.W.T


def bn_statistics_standard(lam: np.ndarray):
    """Per-unit batch mean and unbiased variance (denominator |B| - 1)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[0]
    if n < 2:
        raise BatchTooSmallError(f"need at least 2 rows for a variance, got {n}")
    mean = lam.sum(axis=0) / n
    centered = lam - mean
    var = (centered * centered).sum(axis=0) / (n - 1.0)
    return mean, var


def bn_statistics_weighted(lam: np.ndarray, w: np.ndarray):
    """Weighted per-unit batch mean/variance and the weight mass Z = sum(w).

    mean = sum(w * lam) / Z, var = sum(w * (lam - mean)^2) / (Z - 1).
    All weights must be positive and Z must exceed 1.
    """
    lam = np.asarray(lam, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (lam.shape[0],):
        raise ValueError(f"{w.shape} weights for batch of {lam.shape[0]}")
    if np.any(w <= 0):
        raise ValueError("all batch weights must be positive")
    z = float(w.sum())
    if z <= 1.0:
        raise DegenerateWeightMassError(f"total batch weight {z} <= 1")
    wcol = w[:, None]
    mean = (wcol * lam).sum(axis=0) / z
    centered = lam - mean
    var = (wcol * centered * centered).sum(axis=0) / (z - 1.0)
    return mean, var, z


def bn_transform(lam, mean, var, gamma, epsilon):
    """gamma * (lam - mean) / sqrt(var + epsilon), elementwise per unit."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return gamma * ((lam - mean) / np.sqrt(var + epsilon))


def activation_forward(u_hat: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    """Apply the activation to (b + u_hat); softmax is row-wise and shift-safe."""
    s = u_hat + b
    if kind == "relu":
        return np.maximum(s, 0.0)
    if kind == "softmax":
        e = np.exp(s - s.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    raise ValueError(f"unknown activation {kind!r}")


def weighted_cross_entropy(probs, targets, w, z_total) -> float:
    """(1/Z) * sum_mu w_mu * (-sum_k t log p), with a 1e-12 floor inside log."""
    probs = np.asarray(probs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    f = -(targets * np.log(np.maximum(probs, LOG_FLOOR))).sum(axis=1)
    return float((np.asarray(w, dtype=float) * f).sum() / z_total)


def network_forward_train(net: Network, x: np.ndarray, w: np.ndarray):
    """Training-mode forward pass over one mini-batch.

    Per block: affine signals, batch statistics (weighted when the block's
    normalization layer is in weighted mode), normalization, activation.
    Returns (class probabilities, cache of every intermediate).
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"batch input must be 2-d, got shape {x.shape}")
    if w.shape != (x.shape[0],):
        raise ValueError(f"{w.shape} weights for batch of {x.shape[0]}")
    z_total = float(w.sum())
    caches = []
    z = x
    for blk in net.blocks:
        lam = dense_forward(blk.dense, z)
        if blk.bn.mode == "weighted":
            mean, var, _ = bn_statistics_weighted(lam, w)
        else:
            mean, var = bn_statistics_standard(lam)
        inv_std = 1.0 / np.sqrt(var + blk.bn.epsilon)
        x_hat = (lam - mean) * inv_std
        u_hat = blk.bn.gamma * x_hat
        z_out = activation_forward(u_hat, blk.dense.b, blk.activation)
        caches.append(
            BlockCache(
                z_in=z,
                lam=lam,
                mean=mean,
                var=var,
                inv_std=inv_std,
                x_hat=x_hat,
                u_hat=u_hat,
                z_out=z_out,
            )
        )
        z = z_out
    return z, ForwardCache(blocks=caches, w=w, z_total=z_total)


def _bn_backward(g, bc: BlockCache, mode: str, w: np.ndarray):
    """Gradient through the normalization, statistics included.

    g is the gradient w.r.t. the normalized signal x_hat. The mean and
    variance are differentiated as functions of every affine signal in the
    batch; for the weighted statistics this gives, per row nu,
      dlam_nu = inv_std * (g_nu - (w_nu/Z) * sum(g)
                           - (w_nu/(Z-1)) * x_hat_nu * sum(g * x_hat))
    and the standard form is the same with w = 1, Z = |B|.
    """
    sum_g = g.sum(axis=0)
    sum_gx = (g * bc.x_hat).sum(axis=0)
    if mode == "weighted":
        z = float(w.sum())
        wcol = w[:, None]
        return bc.inv_std * (g - (wcol / z) * sum_g - (wcol / (z - 1.0)) * bc.x_hat * sum_gx)
    n = float(g.shape[0])
    return bc.inv_std * (g - sum_g / n - bc.x_hat * sum_gx / (n - 1.0))


def network_backward(net: Network, cache: ForwardCache, targets: np.ndarray) -> dict:
    """Gradients of the weighted per-batch loss for every learned parameter.

    The softmax output block is fused with the cross-entropy loss, so the
    top error signal is (w/Z) * (probs - targets) per row.
    """
    targets = np.asarray(targets, dtype=float)
    probs = cache.blocks[-1].z_out
    if targets.shape != probs.shape:
        raise ValueError(f"targets {targets.shape} do not match probs {probs.shape}")
    w = cache.w
    grads = {}
    dz = None
    for i in reversed(range(len(net.blocks))):
        blk = net.blocks[i]
        bc = cache.blocks[i]
        if blk.activation == "softmax":
            if i != len(net.blocks) - 1:
                raise ValueError("softmax is only supported as the output activation")
            d_s = (w[:, None] / cache.z_total) * (probs - targets)
        else:
            d_s = dz * ((bc.u_hat + blk.dense.b) > 0)
        grads[f"b{i + 1}"] = d_s.sum(axis=0)
        grads[f"gamma{i + 1}"] = (d_s * bc.x_hat).sum(axis=0)
        g = d_s * blk.bn.gamma
        dlam = _bn_backward(g, bc, blk.bn.mode, w)
        grads[f"W{i + 1}"] = dlam.T @ bc.z_in
        if i > 0:
            dz = dlam @ blk.dense.W
    return grads


def accumulate_inference_stats(layer: BatchNormLayer, means, variances) -> None:
    """Populate inference statistics from per-batch statistics.

    Standard mode: plain averages over the batches. Weighted mode: the mean
    is the same plain average, but the variance adds the sample variance of
    the batch means. Weighted batch means swing with the weight composition
    of each batch, and that between-batch spread is part of the population
    variance the inference transform must divide by; without it the
    normalized signals of rare heavy samples come out far too large. In
    standard mode the spread term is O(v/|B|) and the convention is to
    ignore it.
    """
    if len(means) == 0:
        raise ValueError("no batch statistics to accumulate")
    if len(means) != len(variances):
        raise ValueError(f"{len(means)} means but {len(variances)} variances")
    stacked_means = np.stack(means)
    layer.inference_mean = stacked_means.mean(axis=0)
    layer.inference_var = np.mean(np.stack(variances), axis=0)
    if layer.mode == "weighted" and len(means) > 1:
        layer.inference_var = layer.inference_var + stacked_means.var(axis=0, ddof=1)
    layer.stat_count = len(means)


def network_forward_infer(net: Network, x: np.ndarray) -> np.ndarray:
    """Inference-mode forward pass using accumulated statistics.

    No cross-sample coupling: works row by row, batch size 1 included.
    """
    z = np.atleast_2d(np.asarray(x, dtype=float))
    for blk in net.blocks:
        if blk.bn.inference_mean is None or blk.bn.inference_var is None:
            raise StatsUnpopulatedError(
                "inference statistics not populated; run the statistics pass first"
            )
        lam = dense_forward(blk.dense, z)
        u_hat = bn_transform(
            lam, blk.bn.inference_mean, blk.bn.inference_var, blk.bn.gamma, blk.bn.epsilon
        )
        z = activation_forward(u_hat, blk.dense.b, blk.activation)
    return z
