"""Measured quantities: fringe scans, sinusoid fits, correlation phase,
contrast and excitation spectra.

A "fringe" here is the variation of a signal as the mirror phase psi is swept
over one period.  The red channel is the P-state population (what the red
photomultiplier measures, up to scale); the green channel additionally carries
the first-order detection interference of the mirror with contrast up to the
experimental ~72%.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bloch import LiouvillianFamily, SystemParams, p_population, steady_state_stack
from .drive import effective_detunings, modified_gamma
from .errors import DegenerateGrid, IonMirrorError, UndefinedPhase

TWO_PI = 2.0 * math.pi

FLAG_OK = "ok"
FLAG_UNDEFINED_PHASE = "undefined_phase"
FLAG_SOLVER_FAILURE = "solver_failure"

DEFAULT_PSI_POINTS = 32
DEFAULT_CONTRAST_FLOOR = 1e-6


@dataclass(frozen=True)
class Detection:
    """Green detection model: interference contrast, sign convention, scale.

    ``sign=-1`` (default) puts the detected green maximum at enhanced green
    decay (cos psi = -1); the opposite convention is a legitimate reading of
    the optics, hence the flag.
    """

    contrast: float = 0.72
    sign: int = -1
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("detection contrast must be in [0, 1]")
        if self.sign not in (-1, 1):
            raise ValueError("detection sign must be -1 or +1")


@dataclass(frozen=True)
class FringeScan:
    """Signals on a uniform psi grid over [0, 2pi)."""

    psi_values: np.ndarray
    red_signal: np.ndarray
    green_signal: np.ndarray

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi_values, dtype=float)
        if psi.ndim != 1 or np.any(np.diff(psi) <= 0) or psi[0] < 0 or psi[-1] >= TWO_PI:
            raise ValueError("psi_values must be strictly increasing within [0, 2pi)")
        for sig in (self.red_signal, self.green_signal):
            arr = np.asarray(sig, dtype=float)
            if arr.shape != psi.shape:
                raise ValueError("signal length must match psi grid")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError("signals must be finite and non-negative")


@dataclass(frozen=True)
class FringeFit:
    """Least-squares fit of a signal to a + b*cos(psi) + c*sin(psi)."""

    mean: float
    cos_amp: float
    sin_amp: float
    phase: float          # atan2(sin_amp, cos_amp) mod 2pi
    contrast: float       # sqrt(b^2+c^2)/a
    residual_norm: float  # max-norm of the fit residual
    phase_defined: bool   # False when the fitted amplitude is negligible


def green_signal_model(
    p: SystemParams, detection_contrast: float, *, sign: int = -1, scale: float = 1.0
) -> float:
    """Modeled green detection rate at the operating point of ``p``:

        scale * P_population(rho_ss) * gamma_green(psi) * (1 + sign*contrast*cos psi)

    The default sign puts the detected maximum at enhanced green decay.
    """
    det = Detection(contrast=detection_contrast, sign=sign, scale=scale)
    scan = fringe_scan_at(p, np.array([p.mirror.psi % TWO_PI]), detection=det)
    return float(scan.green_signal[0])


def _green_factor(det: Detection, psi: np.ndarray) -> np.ndarray:
    return det.scale * (1.0 + det.sign * det.contrast * np.cos(psi))


def fringe_scan_at(
    p: SystemParams, psi_values: np.ndarray, *, detection: Detection = Detection()
) -> FringeScan:
    """Steady-state red/green signals on an explicit psi grid."""
    psi_values = np.asarray(psi_values, dtype=float)
    family = LiouvillianFamily(p)
    lvs = family.at_psi(psi_values)
    results = steady_state_stack(lvs)
    red = np.empty(psi_values.size)
    for i, res in enumerate(results):
        if isinstance(res, Exception):
            raise type(res)(f"{res} (at psi={psi_values[i]!r})") from res
        red[i] = p_population(res)
    gammas = np.array(
        [
            modified_gamma(p.rates, dataclasses.replace(p.mirror, psi=float(x)))
            for x in psi_values
        ]
    )
    green = red * gammas * _green_factor(detection, psi_values)
    return FringeScan(psi_values, red, green)


def fringe_scan(
    p: SystemParams, n_points: int = DEFAULT_PSI_POINTS, *, detection: Detection = Detection()
) -> FringeScan:
    """Signals on a uniform n-point psi grid over [0, 2pi)."""
    if n_points < 8:
        raise ValueError("n_points must be >= 8")
    psi = np.arange(n_points) * (TWO_PI / n_points)
    return fringe_scan_at(p, psi, detection=detection)


def fit_fringe(psi_values: np.ndarray, signal: np.ndarray) -> FringeFit:
    """Exact linear least squares of a signal onto {1, cos psi, sin psi}."""
    psi = np.asarray(psi_values, dtype=float)
    y = np.asarray(signal, dtype=float)
    if psi.size < 3:
        raise DegenerateGrid("need at least 3 points for a 3-parameter fit")
    design = np.column_stack([np.ones_like(psi), np.cos(psi), np.sin(psi)])
    coef, _, rank, sv = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3 or sv[-1] < 1e-10 * sv[0]:
        raise DegenerateGrid("psi grid does not resolve mean/cos/sin components")
    a, b, c = (float(v) for v in coef)
    amp = math.hypot(b, c)
    resid = float(np.max(np.abs(y - design @ coef)))
    defined = amp > 1e-12 * max(abs(a), 1.0)
    phase = math.atan2(c, b) % TWO_PI if defined else 0.0
    contrast = amp / a if a != 0 else math.inf
    return FringeFit(a, b, c, phase, contrast, resid, defined)


def correlation_phase(
    green: FringeFit, red: FringeFit, *, floor: float = DEFAULT_CONTRAST_FLOOR
) -> float:
    """Phase of the red fringe relative to the green one, in [0, 2pi).

    0 means correlated, pi anti-correlated.  Raises UndefinedPhase if either
    fit's contrast is below ``floor`` (or flagged undefined).
    """
    for name, fit in (("green", green), ("red", red)):
        if not fit.phase_defined or fit.contrast < floor:
            raise UndefinedPhase(f"{name} fringe contrast {fit.contrast:.3e} below floor {floor:g}")
    return (red.phase - green.phase) % TWO_PI


def expansion_coefficients(
    p: SystemParams,
    *,
    n_points: int = DEFAULT_PSI_POINTS,
    detection: Detection = Detection(),
) -> tuple[float, float, float]:
    """Small-epsilon expansion of the P population over the mirror scan:

        P(psi) = A1 + epsilon*(A2*cos(psi) + A3*sin(psi)) + O(epsilon^2)

    returned as (A1, A2, A3) with the linear terms divided by epsilon.
    A3 vanishes when the level shift is disabled.
    """
    eps = p.mirror.epsilon
    if eps <= 0:
        raise ValueError("expansion requires epsilon > 0")
    scan = fringe_scan(p, n_points, detection=detection)
    fit = fit_fringe(scan.psi_values, scan.red_signal)
    return fit.mean, fit.cos_amp / eps, fit.sin_amp / eps


@dataclass(frozen=True)
class PhasePoint:
    delta_r: float
    phase: float
    red_contrast: float
    flag: str = FLAG_OK


@dataclass(frozen=True)
class ContrastPoint:
    delta_r: float
    red_contrast: float
    flag: str = FLAG_OK


@dataclass(frozen=True)
class SpectrumPoint:
    delta_r: float
    p_population: float
    flag: str = FLAG_OK


def _with_red_detuning(p: SystemParams, delta_r: float) -> SystemParams:
    return dataclasses.replace(p, red=dataclasses.replace(p.red, detuning=float(delta_r)))


def _map_grid(fn, grid, threads: int):
    """Evaluate fn over grid points, optionally in a thread pool; output order
    always follows grid order."""
    items = list(grid)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def phase_vs_detuning(
    p: SystemParams,
    red_detuning_grid,
    *,
    n_points: int = DEFAULT_PSI_POINTS,
    detection: Detection = Detection(),
    contrast_floor: float = DEFAULT_CONTRAST_FLOOR,
    threads: int = 1,
) -> list[PhasePoint]:
    """Correlation phase and red contrast per red detuning.

    Failed entries (undefined phase, solver failure) are flagged, not dropped;
    their phase is NaN.
    """

    def one(delta_r: float) -> PhasePoint:
        try:
            scan = fringe_scan(_with_red_detuning(p, delta_r), n_points, detection=detection)
            red_fit = fit_fringe(scan.psi_values, scan.red_signal)
            green_fit = fit_fringe(scan.psi_values, scan.green_signal)
        except IonMirrorError:
            return PhasePoint(float(delta_r), math.nan, math.nan, FLAG_SOLVER_FAILURE)
        try:
            phase = correlation_phase(green_fit, red_fit, floor=contrast_floor)
        except UndefinedPhase:
            return PhasePoint(float(delta_r), math.nan, red_fit.contrast, FLAG_UNDEFINED_PHASE)
        return PhasePoint(float(delta_r), phase, red_fit.contrast)

    return _map_grid(one, red_detuning_grid, threads)


def contrast_vs_detuning(
    p: SystemParams,
    red_detuning_grid,
    *,
    n_points: int = DEFAULT_PSI_POINTS,
    detection: Detection = Detection(),
    threads: int = 1,
) -> list[ContrastPoint]:
    """Red fringe contrast per red detuning."""

    def one(delta_r: float) -> ContrastPoint:
        try:
            scan = fringe_scan(_with_red_detuning(p, delta_r), n_points, detection=detection)
            fit = fit_fringe(scan.psi_values, scan.red_signal)
            return ContrastPoint(float(delta_r), fit.contrast)
        except IonMirrorError:
            return ContrastPoint(float(delta_r), math.nan, FLAG_SOLVER_FAILURE)

    return _map_grid(one, red_detuning_grid, threads)


def excitation_spectrum(
    p: SystemParams, red_detuning_grid, *, threads: int = 1
) -> list[SpectrumPoint]:
    """Steady-state P population as the red laser is scanned over resonance."""
    grid = np.asarray(list(red_detuning_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("red_detuning_grid must be non-empty")

    def chunk(indices) -> list[SpectrumPoint]:
        family = LiouvillianFamily(p)
        dg0, _ = effective_detunings(p.green, p.red, p.rates, p.mirror)
        delta = p.green.detuning - dg0  # the common mirror shift
        gg = modified_gamma(p.rates, p.mirror)
        sub = grid[indices]
        lvs = family.assemble(
            np.full(sub.size, dg0), sub - delta, np.full(sub.size, gg)
        )
        out = []
        for dr, res in zip(sub, steady_state_stack(lvs)):
            if isinstance(res, Exception):
                out.append(SpectrumPoint(float(dr), math.nan, FLAG_SOLVER_FAILURE))
            else:
                out.append(SpectrumPoint(float(dr), p_population(res)))
        return out

    if threads > 1:
        blocks = np.array_split(np.arange(grid.size), threads)
        parts = _map_grid(chunk, [b for b in blocks if b.size], threads)
        return [pt for part in parts for pt in part]
    return chunk(np.arange(grid.size))
