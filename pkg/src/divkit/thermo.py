"""Gibbs states and the extractable-energy formula Ex = kT * D(s1 || s2).

Units are joules and kelvin throughout; divergences are in nats so that
k * T carries all the dimensions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .simplex import ProbVec, entropy, kl_divergence

__all__ = [
    "BOLTZMANN_K",
    "HeatBath",
    "EnergyLevels",
    "gibbs_state",
    "extractable_energy",
    "free_energy_identity_gap",
]

BOLTZMANN_K = 1.381e-23  # J/K


@dataclass(frozen=True)
class HeatBath:
    """A reservoir at fixed absolute temperature."""

    temperature: float
    k: float = BOLTZMANN_K

    def __post_init__(self):
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive, got {self.temperature!r}")

    @property
    def kt(self) -> float:
        return self.k * self.temperature


class EnergyLevels:
    """Level energies in joules."""

    __slots__ = ("levels",)

    def __init__(self, levels):
        e = np.asarray(levels, dtype=float)
        if e.ndim != 1 or e.size < 1 or not np.all(np.isfinite(e)):
            raise ValueError("energy levels must be a finite vector")
        e.setflags(write=False)
        self.levels = e

    @property
    def dim(self) -> int:
        return self.levels.size


def gibbs_state(e: EnergyLevels, bath: HeatBath) -> ProbVec:
    """Equilibrium weights exp(-E_i / kT), normalized; the exponent is
    shifted by its maximum so large E/kT ratios cannot underflow to an
    all-zero vector."""
    x = -e.levels / bath.kt
    w = np.exp(x - x.max())
    return ProbVec(w / w.sum())


def extractable_energy(s1: ProbVec, s2: ProbVec, bath: HeatBath) -> float:
    """Work obtainable from s1 relative to the equilibrium s2: kT * D(s1 || s2)
    in joules; +inf when the divergence is."""
    return bath.kt * kl_divergence(s1, s2)


def free_energy_identity_gap(s: ProbVec, e: EnergyLevels, bath: HeatBath) -> float:
    """Residual of kT * D(s || gibbs) = F(s) - F(gibbs) with the Helmholtz
    free energy F(p) = <E, p> - kT * H(p)."""
    if s.dim != e.dim:
        raise ValueError(f"state over {s.dim} letters for {e.dim} levels")
    g = gibbs_state(e, bath)
    kt = bath.kt
    lhs = kt * kl_divergence(s, g)
    f_s = float(e.levels @ s.w) - kt * entropy(s)
    f_g = float(e.levels @ g.w) - kt * entropy(g)
    return abs(lhs - (f_s - f_g))
