"""Xavier initialization and the Adam update rule."""

from dataclasses import dataclass, replace

import numpy as np


def xavier_init(fan_in: int, fan_out: int, rng) -> np.ndarray:
    """(fan_out, fan_in) matrix, entries uniform on +-sqrt(6/(fan_in+fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fans must be >= 1, got ({fan_in}, {fan_out})")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


@dataclass
class AdamState:
    first_moment: dict
    second_moment: dict
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8


def init_adam_state(
    params: dict, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps_hat=1e-8
) -> AdamState:
    if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
        raise ValueError(f"betas must lie in [0, 1), got ({beta1}, {beta2})")
    return AdamState(
        first_moment={k: np.zeros_like(v) for k, v in params.items()},
        second_moment={k: np.zeros_like(v) for k, v in params.items()},
        step_count=0,
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps_hat=eps_hat,
    )


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected moment update; returns (new params, new state)."""
    if set(params) != set(grads):
        raise ValueError("parameter and gradient keys differ")
    t = state.step_count + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    new_params, new_m, new_v = {}, {}, {}
    for key, p in params.items():
        g = np.asarray(grads[key], dtype=float)
        if g.shape != p.shape:
            raise ValueError(f"{key}: gradient shape {g.shape} != parameter {p.shape}")
        m = state.beta1 * state.first_moment[key] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment[key] + (1.0 - state.beta2) * (g * g)
        new_params[key] = p - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps_hat)
        new_m[key] = m
        new_v[key] = v
    return new_params, replace(state, first_moment=new_m, second_moment=new_v, step_count=t)
