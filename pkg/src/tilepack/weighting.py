"""Per-token loss reweighting across responses of different lengths.

One weight family covers the standard strategies: exponent 0 is token
averaging, 1 is sample averaging, and 0.5 balances the two by weighting each
token by the inverse square root of its response length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError

TOKEN_AVERAGING = 0.0
SQUARE_AVERAGING = 0.5
SAMPLE_AVERAGING = 1.0


@dataclass(frozen=True)
class WeightStrategy:
    """Weight each token by x^(-exponent), x = its response's token count."""

    exponent: float = SQUARE_AVERAGING

    def __post_init__(self) -> None:
        if not (0.0 <= self.exponent <= 1.0):
            raise ConfigurationError(f"exponent must be in [0,1], got {self.exponent}")


@dataclass(frozen=True)
class ResponseSpan:
    token_count: int
    losses: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.token_count < 1:
            raise ConfigurationError(f"token_count must be >= 1, got {self.token_count}")
        if self.losses is not None and len(self.losses) != self.token_count:
            raise ValidationError(
                f"{len(self.losses)} losses for {self.token_count} tokens"
            )


def raw_weights(spans: Sequence[ResponseSpan], strategy: WeightStrategy) -> np.ndarray:
    """Per-token weights before normalization; tokens of one response share one weight."""
    if not spans:
        return np.zeros(0)
    return np.concatenate(
        [
            np.full(s.token_count, float(s.token_count) ** -strategy.exponent)
            for s in spans
        ]
    )


def normalized_weights(
    spans: Sequence[ResponseSpan], strategy: WeightStrategy
) -> np.ndarray:
    """Raw weights scaled to sum to one over the whole batch."""
    if not spans:
        raise ValidationError("need at least one token to normalize over")
    raw = raw_weights(spans, strategy)
    return raw / raw.sum()


def weighted_loss(spans: Sequence[ResponseSpan], strategy: WeightStrategy) -> float:
    """Normalized-weight combination of per-token losses.

    Exponent 0 reduces to the plain token mean; exponent 1 to the mean of
    per-response means.
    """
    for s in spans:
        if s.losses is None:
            raise ValidationError("every span needs loss values for weighted_loss")
    losses = np.concatenate([np.asarray(s.losses, dtype=float) for s in spans])
    return float(normalized_weights(spans, strategy) @ losses)
