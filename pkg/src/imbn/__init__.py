"""Weighted batch normalization and cost-sensitive losses for imbalanced data."""

from . import dataset, gradcheck, net, optim, synthdigits, trainer, weighting

__all__ = [
    "dataset",
    "gradcheck",
    "net",
    "optim",
    "synthdigits",
    "trainer",
    "weighting",
]
__version__ = "0.1.0"
