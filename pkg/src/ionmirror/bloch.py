"""Rotating-frame Hamiltonian, Lindblad dissipators and steady-state solvers.

Construction conventions, fixed for the whole package:

* Basis order is the canonical sublevel index of :mod:`ionmirror.atom`.
* ``build_hamiltonian`` returns ordinary-frequency MHz.  The Liouvillian
  converts to angular units (rad/us) internally, so time arguments of
  :func:`evolve` are microseconds and decay rates in MHz are linewidths.
* Vectorization is column-stacking: ``vec(rho) = rho.reshape(-1, order="F")``
  and ``vec(A rho B) = (B^T kron A) vec(rho)``, hence
  ``L = -i(I kron H - H^T kron I) + sum_k rate_k D[c_k]`` with
  ``D[c] = conj(c) kron c - (I kron c^dag c + (c^dag c)^T kron I)/2``.

The dimension-generic functions (:func:`liouvillian_matrix`,
:func:`steady_state`, :func:`evolve`) accept any n-level system, which lets
the test suite embed a two-level atom with a known analytic steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .atom import (
    D_SUBLEVELS,
    LevelScheme,
    N_LEVELS,
    P_SUBLEVELS,
    S_SUBLEVELS,
    Level,
    dipole_amplitude,
    zeeman_shift,
)
from .drive import (
    DecayRates,
    LaserDrive,
    MirrorParams,
    Transition,
    effective_detunings,
    modified_gamma,
)
from .errors import NonPhysical, SingularSystem, StepFailure

TWO_PI = 2.0 * math.pi

# Solver tolerances: double precision leaves ample headroom above the 1e-6
# scale at which results are consumed.
RESIDUAL_TOL = 1e-9
POSITIVITY_FLOOR = -1e-9
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
DEGENERACY_RCOND = 1e-10
EVOLVE_RTOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Complete model input: level scheme, both drives, decay rates, mirror."""

    scheme: LevelScheme
    green: LaserDrive
    red: LaserDrive
    rates: DecayRates
    mirror: MirrorParams

    def __post_init__(self) -> None:
        if self.green.transition is not Transition.GREEN:
            raise ValueError("green drive must be on the S<->P transition")
        if self.red.transition is not Transition.RED:
            raise ValueError("red drive must be on the D<->P transition")


def build_hamiltonian(p: SystemParams) -> np.ndarray:
    """8x8 rotating-frame Hamiltonian in MHz.

    Diagonal: -delta_g_eff on S and -delta_r_eff on D (P at zero), plus the
    Zeeman shift of every sublevel.  Off-diagonal: (rabi/2) * a_q * amplitude
    for every allowed sublevel pair of each laser; Hermitian by construction.
    """
    dg_eff, dr_eff = effective_detunings(p.green, p.red, p.rates, p.mirror)
    h = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    for s in S_SUBLEVELS:
        i = p.scheme.index(s)
        h[i, i] = -dg_eff + zeeman_shift(p.scheme, s)
    for s in P_SUBLEVELS:
        i = p.scheme.index(s)
        h[i, i] = zeeman_shift(p.scheme, s)
    for s in D_SUBLEVELS:
        i = p.scheme.index(s)
        h[i, i] = -dr_eff + zeeman_shift(p.scheme, s)
    for laser, lowers in ((p.green, S_SUBLEVELS), (p.red, D_SUBLEVELS)):
        for q in (-1, 0, 1):
            a_q = laser.polarization[q + 1]
            if a_q == 0:
                continue
            for upper in P_SUBLEVELS:
                for lower in lowers:
                    c = dipole_amplitude(upper, lower, q)
                    if c == 0.0:
                        continue
                    amp = 0.5 * laser.rabi * a_q * c
                    iu, il = p.scheme.index(upper), p.scheme.index(lower)
                    h[iu, il] += amp
                    h[il, iu] += np.conj(amp)
    return h


def build_jump_operators(p: SystemParams) -> list[tuple[float, np.ndarray]]:
    """Six (rate_MHz, operator) pairs: green q=-1,0,+1 then red q=-1,0,+1.

    Green rates carry the mirror modulation of Eq.-(1) type; red rates are the
    bare gamma_r (the mirror reflects only the green wavelength).
    """
    gamma_green = modified_gamma(p.rates, p.mirror)
    out: list[tuple[float, np.ndarray]] = []
    for lowers, rate in ((S_SUBLEVELS, gamma_green), (D_SUBLEVELS, p.rates.gamma_r)):
        for q in (-1, 0, 1):
            op = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
            for upper in P_SUBLEVELS:
                for lower in lowers:
                    c = dipole_amplitude(upper, lower, q)
                    if c != 0.0:
                        op[p.scheme.index(lower), p.scheme.index(upper)] = c
            out.append((rate, op))
    return out


def liouvillian_matrix(
    h_mhz: np.ndarray, jumps: list[tuple[float, np.ndarray]]
) -> np.ndarray:
    """n^2 x n^2 Lindblad generator (column stacking, units rad/us)."""
    n = h_mhz.shape[0]
    eye = np.eye(n)
    lv = -1j * (np.kron(eye, h_mhz) - np.kron(h_mhz.T, eye))
    for rate, op in jumps:
        cdc = op.conj().T @ op
        lv += rate * (
            np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, cdc)
            - 0.5 * np.kron(cdc.T, eye)
        )
    return TWO_PI * lv


def build_liouvillian(p: SystemParams) -> np.ndarray:
    """64x64 generator for the full 8-level system."""
    return liouvillian_matrix(build_hamiltonian(p), build_jump_operators(p))


def _trace_row(n: int) -> np.ndarray:
    row = np.zeros(n * n, dtype=complex)
    row[:: n + 1] = 1.0
    return row


def _validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    dev = float(np.max(np.abs(rho - rho.conj().T)))
    if dev > HERMITICITY_TOL:
        raise NonPhysical(f"solution not Hermitian (deviation {dev:.2e})")
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > TRACE_TOL:
        raise NonPhysical(f"trace {tr!r} deviates from 1")
    lo = float(np.min(np.linalg.eigvalsh(rho)))
    if lo < POSITIVITY_FLOOR:
        raise NonPhysical(f"negative eigenvalue {lo:.2e} below floor")
    return rho


def steady_state(lv: np.ndarray, *, allow_degenerate: bool = False) -> np.ndarray:
    """Density matrix annihilated by ``lv``, normalized to unit trace.

    One scalar constraint of the singular system is replaced by the trace
    condition.  A degenerate stationary manifold (e.g. all lasers off, or
    B = 0 coherent population trapping) raises :class:`SingularSystem` unless
    ``allow_degenerate`` is set, in which case the trace-normalized
    minimal-norm member is returned.  The result always satisfies the
    residual, trace, Hermiticity and positivity contracts.
    """
    n2 = lv.shape[0]
    n = math.isqrt(n2)
    if n * n != n2 or lv.shape != (n2, n2):
        raise ValueError(f"Liouvillian must be square with square size, got {lv.shape}")
    tr = _trace_row(n)

    x = None
    try:
        a = lv.copy()
        a[0] = tr
        b = np.zeros(n2, dtype=complex)
        b[0] = 1.0
        cand = np.linalg.solve(a, b)
        if float(np.max(np.abs(lv @ cand))) <= RESIDUAL_TOL:
            x = cand
    except np.linalg.LinAlgError:
        x = None

    if x is None:
        # Robust path: augmented least squares keeps every row of L and
        # exposes the rank through the singular values.
        a = np.vstack([lv, tr])
        b = np.zeros(n2 + 1, dtype=complex)
        b[-1] = 1.0
        x, _, _, sv = np.linalg.lstsq(a, b, rcond=DEGENERACY_RCOND)
        if sv[-1] < DEGENERACY_RCOND * sv[0]:
            if not allow_degenerate:
                raise SingularSystem(
                    "stationary manifold is degenerate "
                    f"(relative smallest singular value {sv[-1] / sv[0]:.2e})"
                )
        residual = float(np.max(np.abs(lv @ x)))
        if residual > RESIDUAL_TOL:
            raise SingularSystem(f"steady-state residual {residual:.2e} above tolerance")

    rho = np.reshape(x, (n, n), order="F")
    return _validate_density_matrix(rho)


def steady_state_stack(lvs: np.ndarray, *, allow_degenerate: bool = False) -> list:
    """Steady states for a stack of Liouvillians, shape (k, n^2, n^2).

    Returns a list with one entry per input: either the density matrix or the
    exception raised for that entry.  The batch path mirrors
    :func:`steady_state` exactly (same row replacement, residual check and
    fallback), it only amortizes the LAPACK calls.
    """
    k, n2, _ = lvs.shape
    n = math.isqrt(n2)
    tr = _trace_row(n)
    a = lvs.copy()
    a[:, 0, :] = tr
    b = np.zeros((k, n2), dtype=complex)
    b[:, 0] = 1.0
    results: list = [None] * k
    try:
        xs = np.linalg.solve(a, b)
        residuals = np.max(np.abs(np.einsum("kij,kj->ki", lvs, xs)), axis=1)
    except np.linalg.LinAlgError:
        xs = None
        residuals = None
    for i in range(k):
        if xs is not None and residuals[i] <= RESIDUAL_TOL:
            try:
                results[i] = _validate_density_matrix(np.reshape(xs[i], (n, n), order="F"))
                continue
            except NonPhysical:
                pass
        try:
            results[i] = steady_state(lvs[i], allow_degenerate=allow_degenerate)
        except (SingularSystem, NonPhysical) as err:
            results[i] = err
    return results


def evolve(lv: np.ndarray, rho0: np.ndarray, t: float, *, rtol: float = EVOLVE_RTOL) -> np.ndarray:
    """Integrate d rho/dt = L rho for ``t`` microseconds (adaptive DOP853).

    Serves as the engine's independent cross-check: for long times the result
    must agree with :func:`steady_state` without sharing its linear algebra.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    n = rho0.shape[0]
    if lv.shape != (n * n, n * n):
        raise ValueError("Liouvillian/state dimensions disagree")
    if t == 0.0:
        return rho0.copy()
    y0 = np.reshape(rho0, -1, order="F").astype(complex)
    sol = solve_ivp(
        lambda _t, y: lv @ y,
        (0.0, float(t)),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-3,
    )
    if not sol.success:
        raise StepFailure(f"integration failed: {sol.message}")
    rho = np.reshape(sol.y[:, -1], (n, n), order="F")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > 1e-8:
        raise StepFailure(f"trace drifted to {tr!r} during integration")
    # Lindblad flow preserves Hermiticity; discard integrator noise.
    return 0.5 * (rho + rho.conj().T)


def p_population(rho: np.ndarray) -> float:
    """Total P1/2 population: sum of the two P diagonal elements."""
    idx = [2, 3]
    return float(np.real(rho[idx, idx].sum()))


def spectral_gap(lv: np.ndarray) -> float:
    """Smallest nonzero decay rate |Re(eigenvalue)| of the generator, 1/us.

    Sets the relaxation horizon for long-time comparisons against
    :func:`steady_state`.
    """
    ev = np.linalg.eigvals(lv)
    rates = -np.real(ev)
    rates = rates[rates > 1e-9]
    if rates.size == 0:
        raise SingularSystem("generator has no decaying modes")
    return float(np.min(rates))


class LiouvillianFamily:
    """Affine decomposition of the generator over a mirror/detuning sweep.

    For fixed polarizations, Rabi frequencies, Zeeman shifts and red decay the
    generator is affine in (delta_g_eff, delta_r_eff, gamma_green):

        L = L_fixed + delta_g_eff*L_S + delta_r_eff*L_D + gamma_green*L_G

    which turns a psi or detuning sweep into cheap matrix updates.  Assembled
    generators are identical (up to float addition order) to
    :func:`build_liouvillian`; a consistency test pins them together.
    """

    def __init__(self, p: SystemParams):
        self.params = p
        jumps = build_jump_operators(p)
        greens, reds = jumps[:3], jumps[3:]
        dg0, dr0 = effective_detunings(p.green, p.red, p.rates, p.mirror)
        diag_s = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
        diag_d = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
        for s in S_SUBLEVELS:
            diag_s[p.scheme.index(s), p.scheme.index(s)] = -1.0
        for s in D_SUBLEVELS:
            diag_d[p.scheme.index(s), p.scheme.index(s)] = -1.0
        h_fixed = build_hamiltonian(p) - dg0 * diag_s - dr0 * diag_d
        self._fixed = liouvillian_matrix(h_fixed, reds)
        self._d_s = liouvillian_matrix(diag_s, [])
        self._d_d = liouvillian_matrix(diag_d, [])
        self._d_g = liouvillian_matrix(np.zeros_like(h_fixed), [(1.0, op) for _, op in greens])

    def assemble(self, dg_eff, dr_eff, gamma_green) -> np.ndarray:
        """Generator(s) at the given effective detunings and green rate.

        Scalars give one (64, 64) matrix; equal-length arrays a (k, 64, 64)
        stack.
        """
        dg = np.asarray(dg_eff, dtype=float)
        dr = np.asarray(dr_eff, dtype=float)
        gg = np.asarray(gamma_green, dtype=float)
        if dg.ndim == 0:
            return self._fixed + dg * self._d_s + dr * self._d_d + gg * self._d_g
        return (
            self._fixed[None, :, :]
            + dg[:, None, None] * self._d_s
            + dr[:, None, None] * self._d_d
            + gg[:, None, None] * self._d_g
        )

    def at_psi(self, psi) -> np.ndarray:
        """Generator(s) along the mirror scan, other parameters fixed."""
        p = self.params
        psi = np.asarray(psi, dtype=float)
        mirrors = [
            MirrorParams(p.mirror.epsilon, float(x), p.mirror.decay_mod_enabled, p.mirror.shift_enabled)
            for x in np.atleast_1d(psi)
        ]
        dets = [effective_detunings(p.green, p.red, p.rates, m) for m in mirrors]
        dg = np.array([d[0] for d in dets])
        dr = np.array([d[1] for d in dets])
        gg = np.array([modified_gamma(p.rates, m) for m in mirrors])
        if psi.ndim == 0:
            return self.assemble(dg[0], dr[0], gg[0])
        return self.assemble(dg, dr, gg)
