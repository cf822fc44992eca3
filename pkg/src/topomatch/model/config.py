"""Architecture and training hyperparameters for the pair classifier."""

from __future__ import annotations

from dataclasses import dataclass

RNN_TYPES = ("gru", "lstm", "rnn")
COMBINATION_MODES = ("one_minus_sq_absdiff",)


@dataclass(frozen=True)
class ModelConfig:
    rnn_type: str = "gru"
    embedding_dim: int = 60
    hidden_dim: int = 60
    num_layers: int = 2
    bidirectional: bool = True
    ff_hidden_dim: int = 120
    dropout_p: float = 0.01
    learning_rate: float = 0.001
    batch_size: int = 64
    combination_mode: str = "one_minus_sq_absdiff"

    def __post_init__(self) -> None:
        if self.rnn_type not in RNN_TYPES:
            raise ValueError(f"rnn_type must be one of {RNN_TYPES}")
        if self.combination_mode not in COMBINATION_MODES:
            raise ValueError(f"combination_mode must be one of {COMBINATION_MODES}")
        for name in ("embedding_dim", "hidden_dim", "num_layers", "ff_hidden_dim", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    @property
    def num_directions(self) -> int:
        return 2 if self.bidirectional else 1

    @property
    def vector_dim(self) -> int:
        """Dimension of the per-string vector fed to the classifier head."""
        return self.num_directions * self.hidden_dim

    @property
    def num_gates(self) -> int:
        return {"gru": 3, "lstm": 4, "rnn": 1}[self.rnn_type]

    def layer_input_dim(self, layer: int) -> int:
        return self.embedding_dim if layer == 0 else self.vector_dim

    def to_dict(self) -> dict:
        return {
            "rnn_type": self.rnn_type,
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "num_layers": self.num_layers,
            "bidirectional": self.bidirectional,
            "ff_hidden_dim": self.ff_hidden_dim,
            "dropout_p": self.dropout_p,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "combination_mode": self.combination_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)
