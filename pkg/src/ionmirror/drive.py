"""Laser drive parameters and the mirror back-action on rates and detunings.

The mirror enters the model through two amendments, both scaled by the
effective solid-angle fraction ``epsilon`` and the round-trip optical phase
``psi = 2kl`` at the green wavelength:

* the green decay rate becomes ``gamma_g * (1 - epsilon*cos(psi))``;
* both laser detunings acquire a common offset
  ``delta = (epsilon*gamma_g/2) * sin(psi)``, an energy shift of the shared
  P1/2 level present even with the lasers off.

Each effect has its own enable flag so the model can be run with only the
decay modulation active (the configuration in which green/red fringes are
strictly correlated or anti-correlated).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class Transition(enum.Enum):
    GREEN = "green"  # S1/2 <-> P1/2, 493 nm
    RED = "red"      # D3/2 <-> P1/2, 650 nm


@dataclass(frozen=True)
class LaserDrive:
    """One laser: transition, detuning and peak Rabi frequency in MHz, and a
    normalized polarization triple (a_-1, a_0, a_+1) in the spherical basis
    along the magnetic-field axis."""

    transition: Transition
    detuning: float
    rabi: float
    polarization: tuple[complex, complex, complex]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.detuning) and math.isfinite(self.rabi)):
            raise ValueError("detuning and rabi must be finite")
        if self.rabi < 0:
            raise ValueError("rabi must be >= 0")
        pol = np.asarray(self.polarization, dtype=complex)
        if pol.shape != (3,):
            raise ValueError("polarization must be a triple (a_-1, a_0, a_+1)")
        norm = float(np.linalg.norm(pol))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("polarization triple must be nonzero and finite")
        pol = pol / norm
        object.__setattr__(self, "polarization", (complex(pol[0]), complex(pol[1]), complex(pol[2])))


@dataclass(frozen=True)
class MirrorParams:
    """Mirror coupling: solid-angle fraction, optical phase, effect toggles."""

    epsilon: float = 0.0
    psi: float = 0.0
    decay_mod_enabled: bool = True
    shift_enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if not math.isfinite(self.psi):
            raise ValueError("psi must be finite")
        object.__setattr__(self, "psi", self.psi % TWO_PI)


@dataclass(frozen=True)
class DecayRates:
    """Spontaneous decay rates in MHz: gamma_g (P->S) and gamma_r (P->D)."""

    gamma_g: float = 15.0
    gamma_r: float = 5.0

    def __post_init__(self) -> None:
        if not (self.gamma_g > 0 and self.gamma_r > 0):
            raise ValueError("decay rates must be strictly positive")


def modified_gamma(rates: DecayRates, mirror: MirrorParams) -> float:
    """Green decay rate with the mirror present: gamma_g * (1 - eps*cos psi)."""
    if not mirror.decay_mod_enabled or mirror.epsilon == 0.0:
        return rates.gamma_g
    return rates.gamma_g * (1.0 - mirror.epsilon * math.cos(mirror.psi))


def level_shift(rates: DecayRates, mirror: MirrorParams) -> float:
    """Common detuning offset delta = (eps*gamma_g/2)*sin(psi) in MHz.

    This is the P1/2 energy shift induced by the mirror; it is subtracted from
    both laser detunings and does not depend on any drive parameter.
    """
    if not mirror.shift_enabled or mirror.epsilon == 0.0:
        return 0.0
    return 0.5 * mirror.epsilon * rates.gamma_g * math.sin(mirror.psi)


def effective_detunings(
    green: LaserDrive, red: LaserDrive, rates: DecayRates, mirror: MirrorParams
) -> tuple[float, float]:
    """Mirror-shifted detunings (delta_g - delta, delta_r - delta)."""
    if green.transition is not Transition.GREEN or red.transition is not Transition.RED:
        raise ValueError("need exactly one green and one red drive, in that order")
    delta = level_shift(rates, mirror)
    return green.detuning - delta, red.detuning - delta
