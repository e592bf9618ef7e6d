"""Linear table policy with learnable context/outcome embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_matrix, log_softmax
from .errors import InvalidInput


@dataclass(frozen=True)
class PreferenceRecord:
    x: int
    y_pos: int
    y_neg: int

    def __post_init__(self):
        if self.y_pos == self.y_neg:
            raise InvalidInput("preferred and rejected outcomes must differ")


@dataclass
class ToyPolicy:
    """pi(y|x) = softmax(logits[x])[y]; e_x = U[x], e_y = V[y]."""

    logits: np.ndarray  # (X, C)
    U: np.ndarray  # (X, m)
    V: np.ndarray  # (C, m)

    def __post_init__(self):
        self.logits = as_matrix(self.logits, "logits").copy()
        self.U = as_matrix(self.U, "U").copy()
        self.V = as_matrix(self.V, "V").copy()
        if self.logits.shape[1] < 2:
            raise InvalidInput("policy needs at least 2 outcomes")
        if self.U.shape[0] != self.logits.shape[0] or self.V.shape[0] != self.logits.shape[1]:
            raise InvalidInput("embedding tables do not match the logit table shape")
        if self.U.shape[1] != self.V.shape[1]:
            raise InvalidInput("context and outcome embeddings must share a dimension")

    @property
    def n_contexts(self) -> int:
        return self.logits.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.logits.shape[1]

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(self.logits, self.U, self.V)

    def probs(self, x: int) -> np.ndarray:
        return np.exp(log_softmax(self.logits[x]))

    def check(self, record: PreferenceRecord) -> None:
        if not (0 <= record.x < self.n_contexts):
            raise InvalidInput(f"context index {record.x} out of range")
        for y in (record.y_pos, record.y_neg):
            if not (0 <= y < self.n_outcomes):
                raise InvalidInput(f"outcome index {y} out of range")

    def to_dict(self) -> dict:
        return {"logits": self.logits.tolist(), "U": self.U.tolist(), "V": self.V.tolist()}
