"""Ba+ level structure: Zeeman sublevels, Lande factors, dipole amplitudes.

The model space is the eight Zeeman sublevels of the S1/2, P1/2 and D3/2
fine-structure levels of 138Ba+ (no hyperfine structure).  Sublevels carry a
fixed basis index so that every matrix in the package shares one layout:

    0: S1/2 m=-1/2    2: P1/2 m=-1/2    4: D3/2 m=-3/2    6: D3/2 m=+1/2
    1: S1/2 m=+1/2    3: P1/2 m=+1/2    5: D3/2 m=-1/2    7: D3/2 m=+3/2

Magnetic-field splittings are parameterized by ``larmor_unit`` = mu_B*B/h in
MHz, so all interface quantities stay ordinary frequencies in MHz.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class Level(enum.Enum):
    """Fine-structure level of the three-level lambda scheme."""

    S12 = "S1/2"
    P12 = "P1/2"
    D32 = "D3/2"

    @property
    def twice_j(self) -> int:
        return {Level.S12: 1, Level.P12: 1, Level.D32: 3}[self]


# Pure-LS Lande factors; fine for this model's accuracy.
LANDE_FACTORS = {Level.S12: 2.0, Level.P12: 2.0 / 3.0, Level.D32: 4.0 / 5.0}


@dataclass(frozen=True, order=False)
class Sublevel:
    """One Zeeman sublevel (level, m). m is half-integer, stored exactly."""

    level: Level
    twice_m: int  # 2*m, so half-integers stay exact

    def __post_init__(self) -> None:
        if abs(self.twice_m) > self.level.twice_j or (self.twice_m - self.level.twice_j) % 2 != 0:
            raise ValueError(f"invalid m={self.twice_m}/2 for {self.level.value}")

    @property
    def m(self) -> float:
        return self.twice_m / 2.0

    def __repr__(self) -> str:
        sign = "+" if self.twice_m > 0 else "-"
        return f"{self.level.value}(m={sign}{abs(self.twice_m)}/2)"


def _canonical_sublevels() -> tuple[Sublevel, ...]:
    out = []
    for level in (Level.S12, Level.P12, Level.D32):
        for twice_m in range(-level.twice_j, level.twice_j + 1, 2):
            out.append(Sublevel(level, twice_m))
    return tuple(out)


SUBLEVELS: tuple[Sublevel, ...] = _canonical_sublevels()
N_LEVELS = len(SUBLEVELS)  # 8
INDEX: dict[Sublevel, int] = {s: i for i, s in enumerate(SUBLEVELS)}

S_SUBLEVELS = tuple(s for s in SUBLEVELS if s.level is Level.S12)
P_SUBLEVELS = tuple(s for s in SUBLEVELS if s.level is Level.P12)
D_SUBLEVELS = tuple(s for s in SUBLEVELS if s.level is Level.D32)


@dataclass(frozen=True)
class LevelScheme:
    """The eight-sublevel scheme with its magnetic-field scale.

    ``larmor_unit`` is mu_B*B/h in MHz; the Zeeman shift of sublevel (level, m)
    is ``g(level) * m * larmor_unit``, also in MHz.
    """

    larmor_unit: float = 0.0
    sublevels: tuple[Sublevel, ...] = SUBLEVELS
    g_factors: dict[Level, float] = field(default_factory=lambda: dict(LANDE_FACTORS))

    def __post_init__(self) -> None:
        if len(self.sublevels) != 8 or len(set(self.sublevels)) != 8:
            raise ValueError("scheme must contain the 8 distinct Ba+ sublevels")
        if not math.isfinite(self.larmor_unit):
            raise ValueError("larmor_unit must be finite")

    def index(self, s: Sublevel) -> int:
        return INDEX[s]


def zeeman_shift(scheme: LevelScheme, s: Sublevel) -> float:
    """Zeeman shift of sublevel ``s`` in MHz: g * m * larmor_unit."""
    if s not in INDEX:
        raise ValueError(f"{s} is not in the scheme")
    return scheme.g_factors[s.level] * s.m * scheme.larmor_unit


# Dipole amplitudes <J_l m_l; 1 q | 1/2 m_u> for decay P1/2 -> S1/2 / D3/2,
# Condon-Shortley phases, keyed (2*m_upper, q).  Per P sublevel and channel
# the squared amplitudes over q sum to 1 (branching is carried by the rates).
_SQ = math.sqrt
_CG_TO_S = {
    (-1, -1): _SQ(2.0 / 3.0),
    (-1, 0): -_SQ(1.0 / 3.0),
    (+1, 0): _SQ(1.0 / 3.0),
    (+1, +1): -_SQ(2.0 / 3.0),
}
_CG_TO_D = {
    (-1, -1): _SQ(1.0 / 6.0),
    (-1, 0): -_SQ(1.0 / 3.0),
    (-1, +1): _SQ(1.0 / 2.0),
    (+1, -1): _SQ(1.0 / 2.0),
    (+1, 0): -_SQ(1.0 / 3.0),
    (+1, +1): _SQ(1.0 / 6.0),
}


def dipole_amplitude(upper: Sublevel, lower: Sublevel, q: int) -> float:
    """Angular-momentum amplitude of the |lower><upper| jump for polarization q.

    Selection rule: zero unless m_lower = m_upper - q.  Normalized so that for
    each P1/2 sublevel and each decay channel (to S or to D) the squared
    amplitudes summed over q and final states equal 1.
    """
    if upper.level is not Level.P12:
        raise ValueError(f"upper sublevel must be P1/2, got {upper}")
    if lower.level is Level.P12:
        raise ValueError(f"lower sublevel must be S1/2 or D3/2, got {lower}")
    if q not in (-1, 0, 1):
        raise ValueError(f"polarization index q must be -1, 0 or +1, got {q}")
    if lower.twice_m != upper.twice_m - 2 * q:
        return 0.0
    table = _CG_TO_S if lower.level is Level.S12 else _CG_TO_D
    return table.get((upper.twice_m, q), 0.0)
