"""Transfer-entropy shaped self-play in the corridor dilemma."""

from ._core import (
    Action,
    GameService,
    InvalidInput,
    MarginalDivisor,
    Objective,
    ParseError,
    QTable,
    RewardMode,
    Seat,
    ServiceError,
    cps,
    evaluate,
    gaussian_entropy,
    normalized_te,
    opponent_history_count,
    parse_pair,
    shannon_entropy,
    softmax,
    success_rates,
    train,
    train_and_evaluate,
    transfer_entropy,
)

__all__ = [
    "Action",
    "GameService",
    "InvalidInput",
    "MarginalDivisor",
    "Objective",
    "ParseError",
    "QTable",
    "RewardMode",
    "Seat",
    "ServiceError",
    "cps",
    "evaluate",
    "gaussian_entropy",
    "normalized_te",
    "opponent_history_count",
    "parse_pair",
    "shannon_entropy",
    "softmax",
    "success_rates",
    "train",
    "train_and_evaluate",
    "transfer_entropy",
]
