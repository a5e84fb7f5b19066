"""Default operating point for scans and tests.

These values reproduce the qualitative regime of the correlation-phase and
contrast measurements: near-saturation drives, a few-MHz Zeeman splitting and
an epsilon of two percent.  gamma_g and epsilon are anchored by the 150 kHz
level-shift scale; everything else is a tunable default, not ground truth.
"""

from __future__ import annotations

import math

import numpy as np

from .atom import LevelScheme
from .bloch import SystemParams
from .drive import DecayRates, LaserDrive, MirrorParams, Transition

# Equal sigma-/sigma+ mix (linear polarization perpendicular to B) for both
# lasers: couples every sublevel and yields deep dark resonances.
SIGMA_PM = (1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0))

DEFAULT_GAMMA_G = 15.0
DEFAULT_GAMMA_R = 5.0
DEFAULT_RABI_G = 10.0
DEFAULT_RABI_R = 10.0
DEFAULT_DELTA_G = -10.0
DEFAULT_DELTA_R = 0.0
DEFAULT_LARMOR = 3.0
DEFAULT_EPSILON = 0.02
DEFAULT_DETECTION_CONTRAST = 0.72


def default_system(
    *,
    gamma_g: float = DEFAULT_GAMMA_G,
    gamma_r: float = DEFAULT_GAMMA_R,
    rabi_g: float = DEFAULT_RABI_G,
    rabi_r: float = DEFAULT_RABI_R,
    delta_g: float = DEFAULT_DELTA_G,
    delta_r: float = DEFAULT_DELTA_R,
    larmor_unit: float = DEFAULT_LARMOR,
    green_pol: tuple = SIGMA_PM,
    red_pol: tuple = SIGMA_PM,
    epsilon: float = DEFAULT_EPSILON,
    psi: float = 0.0,
    decay_mod_enabled: bool = True,
    shift_enabled: bool = True,
) -> SystemParams:
    """SystemParams at the default operating point, with keyword overrides."""
    return SystemParams(
        scheme=LevelScheme(larmor_unit=larmor_unit),
        green=LaserDrive(Transition.GREEN, delta_g, rabi_g, tuple(green_pol)),
        red=LaserDrive(Transition.RED, delta_r, rabi_r, tuple(red_pol)),
        rates=DecayRates(gamma_g, gamma_r),
        mirror=MirrorParams(epsilon, psi, decay_mod_enabled, shift_enabled),
    )


def default_detuning_grid(lo: float = -60.0, hi: float = 60.0, n: int = 61) -> np.ndarray:
    """Red-detuning grid wide enough that the correlation phase relaxes to ~0
    at both ends."""
    return np.linspace(lo, hi, n)
