"""Nonlinear least-squares calibration of model parameters.

Mirrors the experimental workflow: laser saturation parameters, the green
detuning and the magnetic field are recovered from an excitation spectrum;
the solid-angle fraction epsilon from a contrast-vs-detuning curve.

The fitter is a damped (Levenberg-Marquardt) least-squares loop with central
finite-difference Jacobians; chi^2 never increases across accepted steps and
all evaluations are deterministic.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bloch import SystemParams
from .errors import BadInitial
from .observables import contrast_vs_detuning, excitation_spectrum

JACOBIAN_REL_STEP = 1e-5


def _set_scheme_larmor(p: SystemParams, v: float) -> SystemParams:
    return dataclasses.replace(p, scheme=dataclasses.replace(p.scheme, larmor_unit=v))


# Named scalar knobs a fit may free.  Each maps to a copy-with-update on
# SystemParams, keeping the frozen dataclasses immutable.
PARAM_SETTERS: dict[str, Callable[[SystemParams, float], SystemParams]] = {
    "rabi_g": lambda p, v: dataclasses.replace(p, green=dataclasses.replace(p.green, rabi=v)),
    "rabi_r": lambda p, v: dataclasses.replace(p, red=dataclasses.replace(p.red, rabi=v)),
    "delta_g": lambda p, v: dataclasses.replace(p, green=dataclasses.replace(p.green, detuning=v)),
    "delta_r": lambda p, v: dataclasses.replace(p, red=dataclasses.replace(p.red, detuning=v)),
    "larmor_unit": _set_scheme_larmor,
    "epsilon": lambda p, v: dataclasses.replace(p, mirror=dataclasses.replace(p.mirror, epsilon=v)),
    "psi": lambda p, v: dataclasses.replace(p, mirror=dataclasses.replace(p.mirror, psi=v)),
    "gamma_g": lambda p, v: dataclasses.replace(p, rates=dataclasses.replace(p.rates, gamma_g=v)),
    "gamma_r": lambda p, v: dataclasses.replace(p, rates=dataclasses.replace(p.rates, gamma_r=v)),
}


def apply_params(base: SystemParams, values: dict[str, float]) -> SystemParams:
    """Return a copy of ``base`` with the named scalar fields replaced."""
    p = base
    for name, v in values.items():
        try:
            p = PARAM_SETTERS[name](p, float(v))
        except KeyError:
            raise ValueError(f"unknown fit parameter {name!r}") from None
    return p


class Convergence(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    STALLED = "stalled"


@dataclass(frozen=True)
class FitConfig:
    max_iter: int = 60
    tol: float = 1e-10  # relative chi^2 change defining convergence

    def __post_init__(self) -> None:
        if self.max_iter < 0 or self.tol <= 0:
            raise ValueError("max_iter must be >= 0 and tol > 0")


@dataclass(frozen=True)
class FitProblem:
    """Observed (x, y, sigma) points, a model, and the free-parameter box.

    ``model(params, x)`` must return model values at the x points for a
    SystemParams obtained from ``base`` by applying the free parameters.
    """

    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    model: Callable[[SystemParams, np.ndarray], np.ndarray]
    base: SystemParams
    free: dict[str, tuple[float, float]]

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        if not (x.shape == y.shape == s.shape) or x.ndim != 1 or x.size == 0:
            raise ValueError("x, y, sigma must be equal-length 1-d arrays")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("all sigma must be positive and finite")
        if not self.free:
            raise ValueError("free parameter set must be non-empty")
        for name, (lo, hi) in self.free.items():
            if name not in PARAM_SETTERS:
                raise ValueError(f"unknown fit parameter {name!r}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name!r} must be finite and ordered")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", s)


@dataclass(frozen=True)
class FitResult:
    best_params: dict[str, float]
    chi2: float
    uncertainties: dict[str, float]  # local quadratic approximation, 1 sigma
    convergence: Convergence
    n_iter: int = 0

    def __post_init__(self) -> None:
        if self.chi2 < 0:
            raise ValueError("chi2 must be >= 0")


def _clip(problem: FitProblem, names: list[str], vec: np.ndarray) -> np.ndarray:
    out = vec.copy()
    for i, name in enumerate(names):
        lo, hi = problem.free[name]
        out[i] = min(max(out[i], lo), hi)
    return out


def _uncertainties(names, jac, ok=True) -> dict[str, float]:
    if not ok:
        return {n: math.nan for n in names}
    try:
        cov = np.linalg.inv(jac.T @ jac)
        return {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    except np.linalg.LinAlgError:
        return {n: math.nan for n in names}


def nlls_fit(problem: FitProblem, initial: dict[str, float], config: FitConfig = FitConfig()) -> FitResult:
    """Damped least squares from ``initial`` (which must lie within bounds).

    Steps are only accepted when they reduce chi^2; convergence means the
    relative chi^2 decrease of an accepted step fell below ``config.tol``.
    ``max_iter = 0`` returns the initial point with its chi^2.
    """
    names = sorted(problem.free)
    if set(initial) < set(names):
        raise ValueError(f"initial values required for all free parameters {names}")
    vec = np.array([float(initial[n]) for n in names])
    for i, n in enumerate(names):
        lo, hi = problem.free[n]
        if not lo <= vec[i] <= hi:
            raise ValueError(f"initial {n}={vec[i]!r} outside bounds [{lo}, {hi}]")

    def residuals(v: np.ndarray) -> np.ndarray:
        p = apply_params(problem.base, dict(zip(names, v)))
        f = np.asarray(problem.model(p, problem.x), dtype=float)
        return (problem.y - f) / problem.sigma

    def chi2_of(r: np.ndarray) -> float:
        return float(np.dot(r, r))

    try:
        res = residuals(vec)
        if not np.all(np.isfinite(res)):
            raise BadInitial("model returned non-finite values at the initial point")
    except BadInitial:
        raise
    except Exception as err:
        raise BadInitial(f"model evaluation failed at the initial point: {err}") from err
    chi2 = chi2_of(res)

    def jacobian(v: np.ndarray) -> np.ndarray:
        jac = np.empty((problem.x.size, len(names)))
        for i, name in enumerate(names):
            lo, hi = problem.free[name]
            h = JACOBIAN_REL_STEP * max(abs(v[i]), 1e-3 * (hi - lo))
            vp, vm = v.copy(), v.copy()
            vp[i] = min(v[i] + h, hi)
            vm[i] = max(v[i] - h, lo)
            jac[:, i] = -(residuals(vp) - residuals(vm)) / (vp[i] - vm[i])
        return jac  # d(model/sigma)/d(param)

    lam = 1e-3
    jac = None
    convergence = Convergence.MAX_ITER
    it = 0
    for it in range(1, config.max_iter + 1):
        jac = jacobian(vec)
        grad = jac.T @ res  # note residuals = (y-f)/sigma, jac = +df/dp scaled
        jtj = jac.T @ jac
        accepted = False
        for _ in range(16):
            damped = jtj + lam * np.diag(np.clip(np.diag(jtj), 1e-12, None))
            try:
                step = np.linalg.solve(damped, grad)
            except np.linalg.LinAlgError:
                lam *= 5.0
                continue
            trial = _clip(problem, names, vec + step)
            r_trial = residuals(trial)
            if np.all(np.isfinite(r_trial)) and chi2_of(r_trial) < chi2:
                rel_drop = (chi2 - chi2_of(r_trial)) / max(chi2, 1e-300)
                vec, res, chi2 = trial, r_trial, chi2_of(r_trial)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < config.tol:
                    convergence = Convergence.CONVERGED
                break
            lam *= 5.0
        if not accepted:
            convergence = Convergence.STALLED
            break
        if convergence is Convergence.CONVERGED:
            break

    if jac is None and config.max_iter > 0:
        jac = jacobian(vec)
    unc = _uncertainties(names, jac, ok=jac is not None)
    return FitResult(dict(zip(names, (float(v) for v in vec))), chi2, unc, convergence, it)


SPECTRUM_BOUNDS = {
    "rabi_g": (0.5, 60.0),
    "rabi_r": (0.5, 60.0),
    "delta_g": (-60.0, 60.0),
    "larmor_unit": (0.1, 20.0),
}


def fit_spectrum(
    x: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray,
    base: SystemParams,
    initial: dict[str, float],
    *,
    free: dict[str, tuple[float, float]] | None = None,
    config: FitConfig = FitConfig(),
) -> FitResult:
    """Fit an excitation spectrum for the drive strengths, the green detuning
    and the Zeeman scale (the routine calibration fit)."""

    def model(p: SystemParams, grid: np.ndarray) -> np.ndarray:
        return np.array([pt.p_population for pt in excitation_spectrum(p, grid)])

    problem = FitProblem(x, y, sigma, model, base, dict(free or SPECTRUM_BOUNDS))
    return nlls_fit(problem, initial, config)


def fit_epsilon(
    x: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray,
    base: SystemParams,
    *,
    initial: float = 0.01,
    bounds: tuple[float, float] = (0.0, 0.2),
    n_points: int = 16,
    config: FitConfig = FitConfig(),
) -> FitResult:
    """Fit the effective solid-angle fraction to a red-contrast curve."""

    def model(p: SystemParams, grid: np.ndarray) -> np.ndarray:
        return np.array([pt.red_contrast for pt in contrast_vs_detuning(p, grid, n_points=n_points)])

    problem = FitProblem(x, y, sigma, model, base, {"epsilon": bounds})
    return nlls_fit(problem, {"epsilon": initial}, config)
