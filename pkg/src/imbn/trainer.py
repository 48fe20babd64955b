"""Mini-batch training loop, statistics pass, and test-set evaluation.

Three training methods cover the baseline and proposed combinations:

  lf_sbn   unweighted loss, standard batch statistics
  wlf_sbn  weighted loss, standard batch statistics (the size-mismatch
           baseline: the loss reweights samples, the statistics do not)
  wlf_pbn  weighted loss, weighted batch statistics

Weighted methods use inverse-class-frequency weights by default, or
class-balanced weights when a beta is configured.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, partition_batches
from .net import (
    Network,
    accumulate_inference_stats,
    build_network,
    network_backward,
    network_forward_infer,
    network_forward_train,
    weighted_cross_entropy,
)
from .optim import adam_step, init_adam_state
from .weighting import class_balanced_weights, class_counts, inverse_frequency_weights

METHODS = ("lf_sbn", "wlf_sbn", "wlf_pbn")
METHOD_ALIASES = {"a": "lf_sbn", "b": "wlf_sbn", "c": "wlf_pbn"}


@dataclass
class TrainConfig:
    method: str = "lf_sbn"
    batch_size: int = 100
    epochs: int = 10
    seed: int = 0
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epsilon: float = 1e-8  # normalization guard
    beta: float | None = None  # class-balanced weighting; None = inverse frequency
    hidden_units: int = 200

    def __post_init__(self):
        self.method = METHOD_ALIASES.get(self.method, self.method)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class TrainedModel:
    network: Network
    history: list  # mean per-batch loss per epoch
    config: TrainConfig


@dataclass
class MetricsReport:
    per_class_accuracy: np.ndarray  # (K,)
    overall_accuracy: float
    confusion: np.ndarray  # (K, K) counts, rows are true classes
    config: TrainConfig
    seed: int


def sample_weights(config: TrainConfig, data: Dataset) -> np.ndarray:
    """Training weights for the configured method over the full data set."""
    if config.method == "lf_sbn":
        return np.ones(data.n)
    counts = class_counts(data)
    if config.beta is None:
        return inverse_frequency_weights(counts, data.labels).weights
    return class_balanced_weights(counts, data.labels, config.beta).weights


def train(config: TrainConfig, data: Dataset) -> TrainedModel:
    """Train a fresh network on the data set.

    Each epoch reshuffles with a seed derived from (config.seed, epoch),
    then steps through the batches with Adam. After the last epoch a frozen
    pass over the final partition accumulates the inference statistics.
    Bit-reproducible for a fixed config.
    """
    weights = sample_weights(config, data)
    mode = "weighted" if config.method == "wlf_pbn" else "standard"
    seeds = np.random.SeedSequence(config.seed).spawn(config.epochs + 1)
    net = build_network(
        data.n_features,
        config.hidden_units,
        data.n_classes,
        mode=mode,
        epsilon=config.epsilon,
        rng=np.random.default_rng(seeds[0]),
    )
    state = init_adam_state(
        net.parameters(),
        learning_rate=config.learning_rate,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps_hat=config.adam_eps,
    )

    history = []
    partition = None
    for epoch in range(config.epochs):
        rng = np.random.default_rng(seeds[1 + epoch])
        partition = partition_batches(data.n, config.batch_size, rng)
        losses = []
        for batch in partition.batches:
            xb = data.inputs[batch]
            tb = data.targets[batch]
            wb = weights[batch]
            probs, cache = network_forward_train(net, xb, wb)
            losses.append(weighted_cross_entropy(probs, tb, wb, cache.z_total))
            grads = network_backward(net, cache, tb)
            params, state = adam_step(net.parameters(), grads, state)
            net.set_parameters(params)
        history.append(float(np.mean(losses)))

    # statistics pass: frozen parameters, final epoch's partition
    collected = [([], []) for _ in net.blocks]
    for batch in partition.batches:
        _, cache = network_forward_train(net, data.inputs[batch], weights[batch])
        for (means, variances), bc in zip(collected, cache.blocks):
            means.append(bc.mean)
            variances.append(bc.var)
    for blk, (means, variances) in zip(net.blocks, collected):
        accumulate_inference_stats(blk.bn, means, variances)

    return TrainedModel(network=net, history=history, config=config)


def evaluate(model: TrainedModel, data: Dataset) -> MetricsReport:
    """Confusion counts and accuracies; argmax ties break to the lower class."""
    probs = network_forward_infer(model.network, data.inputs)
    predicted = np.argmax(probs, axis=1)
    k = data.n_classes
    confusion = np.zeros((k, k), dtype=int)
    np.add.at(confusion, (data.labels, predicted), 1)
    row_totals = confusion.sum(axis=1)
    per_class = np.divide(
        np.diag(confusion),
        row_totals,
        out=np.zeros(k, dtype=float),
        where=row_totals > 0,
    )
    overall = float(np.trace(confusion) / confusion.sum())
    return MetricsReport(
        per_class_accuracy=per_class,
        overall_accuracy=overall,
        confusion=confusion,
        config=model.config,
        seed=model.config.seed,
    )
