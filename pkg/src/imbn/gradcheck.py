"""Finite-difference verification of the analytic gradients.

The checker rebuilds the loss from scratch for every perturbed coordinate,
so it is independent of the backward pass it validates. Relative error per
coordinate is |a - b| / max(|a|, |b|, 1e-8).
"""

from dataclasses import dataclass

import numpy as np

from .net import (
    build_network,
    network_backward,
    network_forward_train,
    weighted_cross_entropy,
)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str  # "name[flat_index]" of the worst coordinate
    per_param: dict  # parameter name -> max relative error
    tolerance: float
    passed: bool


def finite_difference_gradient(loss_fn, params: dict, h: float = DEFAULT_STEP) -> dict:
    """Central differences (L(p + h e) - L(p - h e)) / 2h per coordinate.

    loss_fn takes the parameter dict and returns a scalar; it must be
    deterministic (checked by evaluating twice at the base point).
    """
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    base = {k: np.array(v, dtype=float) for k, v in params.items()}
    l0 = loss_fn(base)
    if loss_fn(base) != l0:
        raise RuntimeError("loss is not deterministic at the base point")
    grads = {}
    for key, value in base.items():
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            lp = loss_fn(base)
            flat[idx] = orig - h
            lm = loss_fn(base)
            flat[idx] = orig
            gflat[idx] = (lp - lm) / (2.0 * h)
        grads[key] = grad
    return grads


def _batch_loss(net, params, x, targets, w):
    net.set_parameters(params)
    probs, cache = network_forward_train(net, x, w)
    return weighted_cross_entropy(probs, targets, w, cache.z_total)


def check_gradients(
    net,
    x,
    targets,
    w,
    tolerance: float = DEFAULT_TOLERANCE,
    h: float = DEFAULT_STEP,
    corrupt: str | None = None,
) -> GradCheckReport:
    """Compare network_backward against central differences on one batch.

    corrupt is a test hook: doubling the first entry of the named analytic
    gradient must make the check fail and point at that coordinate.
    """
    x = np.asarray(x, dtype=float)
    targets = np.asarray(targets, dtype=float)
    w = np.asarray(w, dtype=float)
    params = {k: v.copy() for k, v in net.parameters().items()}

    probs, cache = network_forward_train(net, x, w)
    analytic = network_backward(net, cache, targets)
    if corrupt is not None:
        analytic[corrupt] = analytic[corrupt].copy()
        analytic[corrupt].reshape(-1)[0] *= 2.0

    numeric = finite_difference_gradient(
        lambda p: _batch_loss(net, p, x, targets, w), params, h=h
    )
    net.set_parameters(params)

    per_param = {}
    worst = ("", -1.0)
    for key in params:
        a = analytic[key].reshape(-1)
        b = numeric[key].reshape(-1)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
        rel = np.abs(a - b) / scale
        idx = int(np.argmax(rel))
        per_param[key] = float(rel[idx])
        if rel[idx] > worst[1]:
            worst = (f"{key}[{idx}]", float(rel[idx]))
    return GradCheckReport(
        max_rel_error=worst[1],
        worst_param=worst[0],
        per_param=per_param,
        tolerance=tolerance,
        passed=worst[1] < tolerance,
    )


def make_check_instance(seed: int, mode: str, skewed: bool = False, h: float = DEFAULT_STEP):
    """Small random network plus batch for a gradient check.

    Batches whose hidden pre-activations sit within 10h of the relu kink are
    resampled so the finite differences stay on a smooth patch.
    """
    rng = np.random.default_rng(seed)
    for _ in range(200):
        net = build_network(4, 5, 2, mode=mode, rng=rng)
        x = rng.normal(size=(4, 4))
        targets = np.eye(2)[rng.integers(0, 2, size=4)]
        if skewed:
            w = rng.choice([1.0, 132.62], size=4)
            if w.sum() <= 1.0:
                continue
        elif mode == "weighted":
            w = rng.uniform(0.5, 4.0, size=4)
        else:
            w = np.ones(4)
        _, cache = network_forward_train(net, x, w)
        hidden = cache.blocks[0]
        preact = hidden.u_hat + net.blocks[0].dense.b
        if np.min(np.abs(preact)) > 10.0 * h:
            return net, x, targets, w
    raise RuntimeError("could not draw a batch clear of relu kinks")
