"""Kruskal (CP) model container."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComponentError, DimensionError
from .tensor import kruskal_reconstruct


@dataclass(frozen=True, eq=False)
class KruskalModel:
    """Weights plus one ``I_n x R`` factor matrix per mode.

    Factor columns are expected to have unit 2-norm whenever the model comes
    out of a normalization step; construction does not enforce it so that
    intermediate (unnormalized) models can be represented too.
    """

    weights: np.ndarray
    factors: tuple

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        factors = tuple(np.array(f, dtype=np.float64) for f in self.factors)
        if weights.size < 1:
            raise DimensionError("rank must be at least 1")
        if not factors:
            raise DimensionError("a model needs at least one factor matrix")
        for n, f in enumerate(factors):
            if f.ndim != 2 or f.shape[1] != weights.size:
                raise DimensionError(
                    f"factor {n} has shape {f.shape}, expected (I_{n}, {weights.size})"
                )
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self):
        return self.weights.size

    @property
    def ndim(self):
        return len(self.factors)

    @property
    def shape(self):
        return tuple(f.shape[0] for f in self.factors)

    def full(self):
        """Dense tensor represented by the model."""
        return kruskal_reconstruct(self)

    def copy(self):
        return KruskalModel(self.weights.copy(), tuple(f.copy() for f in self.factors))

    def is_normalized(self, tol=1e-12):
        return all(
            np.all(np.abs(np.linalg.norm(f, axis=0) - 1.0) <= tol) for f in self.factors
        )

    def normalized(self):
        """Equivalent model with unit factor columns; norms move into the weights."""
        weights = self.weights.copy()
        factors = []
        for n, f in enumerate(self.factors):
            norms = np.linalg.norm(f, axis=0)
            for r in np.flatnonzero(norms == 0):
                raise DegenerateComponentError(int(r), mode=n)
            weights = weights * norms
            factors.append(f / norms)
        return KruskalModel(weights, tuple(factors))

    def permuted(self, order):
        """Reorder components consistently across weights and factors."""
        order = np.asarray(order)
        return KruskalModel(self.weights[order], tuple(f[:, order] for f in self.factors))
