"""Finite point mixtures used as coefficient laws.

A mixture holds the law of a sqrt(n)-scaled regression coefficient: a point
mass at zero for nulls plus a finite set of signal atoms.  All moment
computations on these laws are exact sums over atoms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class SignalMixture:
    """Finite point mixture ``sum_k w_k * delta(v_k)``.

    Atoms are (value, weight) pairs.  Weights must be nonnegative and sum to
    one; at most one atom may sit at zero.
    """

    atoms: tuple[tuple[float, float], ...] = field(default=((0.0, 1.0),))

    def __post_init__(self):
        atoms = tuple((float(v), float(w)) for v, w in self.atoms)
        if not atoms:
            raise ValueError("mixture needs at least one atom")
        values = [v for v, _ in atoms]
        weights = [w for _, w in atoms]
        if any(not np.isfinite(v) for v in values):
            raise ValueError("atom values must be finite")
        if any(w < 0 for w in weights):
            raise ValueError("atom weights must be nonnegative")
        if abs(sum(weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {sum(weights)}, not 1")
        if sum(1 for v in values if v == 0.0) > 1:
            raise ValueError("at most one atom at zero")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point(cls, value: float) -> "SignalMixture":
        return cls(((value, 1.0),))

    @classmethod
    def sparse(cls, gamma: float, value: float) -> "SignalMixture":
        """gamma * delta_0 + (1 - gamma) * delta_value."""
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if gamma == 1.0:
            return cls.point(0.0)
        if gamma == 0.0:
            return cls.point(value)
        return cls(((0.0, gamma), (value, 1.0 - gamma)))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def second_moment(self) -> float:
        return float(np.sum(self.weights * self.values**2))

    def null_mass(self) -> float:
        """Probability of drawing exactly zero."""
        return float(sum(w for v, w in self.atoms if v == 0.0))

    def nonzero_part(self) -> "SignalMixture":
        """Conditional law given the draw is nonzero."""
        atoms = [(v, w) for v, w in self.atoms if v != 0.0 and w > 0.0]
        total = sum(w for _, w in atoms)
        if total <= 0.0:
            raise ValueError("mixture has no nonzero mass")
        return SignalMixture(tuple((v, w / total) for v, w in atoms))

    def scaled(self, factor: float) -> "SignalMixture":
        """Law of factor * B for B drawn from this mixture."""
        return SignalMixture(tuple((v * factor, w) for v, w in self.atoms))

    def thinned(self, keep: float) -> "SignalMixture":
        """Law of I * B with I ~ Bernoulli(keep) independent of B."""
        if not 0.0 < keep <= 1.0:
            raise ValueError("keep probability must be in (0, 1]")
        zero = (1.0 - keep) + keep * self.null_mass()
        atoms = [(0.0, zero)] if zero > 0.0 else []
        atoms += [(v, keep * w) for v, w in self.atoms if v != 0.0]
        return SignalMixture(tuple(atoms))

    def with_null(self, gamma: float) -> "SignalMixture":
        """gamma * delta_0 + (1 - gamma) * (this mixture)."""
        if not 0.0 <= gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        zero = gamma + (1.0 - gamma) * self.null_mass()
        atoms = [(0.0, zero)] if zero > 0.0 else []
        atoms += [(v, (1.0 - gamma) * w) for v, w in self.atoms if v != 0.0]
        return SignalMixture(tuple(atoms))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.atoms), size=size, p=self.weights)
        return self.values[idx]

    def to_json(self) -> list:
        return [[v, w] for v, w in self.atoms]

    @classmethod
    def from_json(cls, data) -> "SignalMixture":
        return cls(tuple((float(v), float(w)) for v, w in data))
