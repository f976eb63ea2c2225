"""Dense state vectors over a half-filled FockBasis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import FockBasis


@dataclass
class StateVector:
    """Complex amplitude vector indexed by basis position.

    Normalization is maintained by the measurement loop; helper
    constructors always return unit vectors.
    """

    basis: FockBasis
    amps: np.ndarray

    def __post_init__(self) -> None:
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector has shape {self.amps.shape}, expected ({self.basis.dim},)"
            )

    @classmethod
    def from_word(cls, basis: FockBasis, word: int) -> "StateVector":
        amps = np.zeros(basis.dim, dtype=np.complex128)
        amps[basis.index_of(word)] = 1.0
        return cls(basis, amps)

    @classmethod
    def from_amplitudes(cls, basis: FockBasis, amps) -> "StateVector":
        v = np.asarray(amps, dtype=np.complex128)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(basis, v / n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amps.copy())

    def check_normalized(self, tol: float = 1e-8) -> None:
        n = self.norm()
        if abs(n - 1.0) > tol:
            raise ValueError(f"state is not normalized: ||amps|| = {n!r}")
