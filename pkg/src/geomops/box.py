"""Axis-aligned coordinate boxes used for probing, flows and quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(a) for a in self.lower)
        hi = tuple(float(b) for b in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box needs matching, non-empty lower/upper bounds")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box: need lower < upper on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, dim: int, a: float = 0.0, b: float = 1.0) -> "Box":
        return cls((a,) * dim, (b,) * dim)

    @classmethod
    def from_flat(cls, values) -> "Box":
        """``[a1, b1, a2, b2, ...]`` as used on the command line."""
        v = [float(x) for x in values]
        if len(v) % 2:
            raise ValueError("box needs an even number of bounds a1,b1,a2,b2,...")
        return cls(tuple(v[0::2]), tuple(v[1::2]))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lower) + np.array(self.upper))

    def contains(self, points, slack: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= np.array(self.lower) - slack) & (p <= np.array(self.upper) + slack), axis=1)

    def scale(self, unit_points) -> np.ndarray:
        lo, hi = np.array(self.lower), np.array(self.upper)
        return lo + np.asarray(unit_points) * (hi - lo)

    def probes(self, count: int = 32, seed: int = 0) -> np.ndarray:
        """Deterministic scrambled-Halton points strictly inside the box."""
        u = qmc.Halton(d=self.dim, scramble=True, seed=seed).random(count)
        return self.scale(u)

    def random(self, count: int, rng=None, margin: float = 0.0) -> np.ndarray:
        rng = np.random.default_rng(rng)
        lo = np.array(self.lower) + margin * (np.array(self.upper) - np.array(self.lower))
        hi = np.array(self.upper) - margin * (np.array(self.upper) - np.array(self.lower))
        return lo + rng.random((count, self.dim)) * (hi - lo)

    def to_flat(self) -> list:
        out = []
        for a, b in zip(self.lower, self.upper):
            out += [a, b]
        return out
