"""Propagation: unitary work strokes and the dissipative heating stroke.

The ramp unitaries use a midpoint product of closed-form 2x2 exponentials
(second order in the step, exactly unitary at every step).  The compression
propagator is the exact adjoint of the expansion one; the sign-flipped,
time-reversed drive makes the two products coincide factor by factor.

The heating stroke integrates a time-local master equation
    drho/dt = -i[H, rho] + G(t) D[A] rho + gt(t) D[A^dag] rho ,
with D[X] rho = X rho X^dag - {X^dag X, rho}/2 and both coefficients read
from a precomputed rate table.  The state rides as a real 4-vector
(trace, Bloch components), which keeps Hermiticity exact by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .bath import RateTrajectory
from .matcore import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix,
                      dag, expm_aherm)
from .model import Stroke, SystemParams, hamiltonian_cold, hamiltonian_hot, herm_eig2

DEFAULT_N_STEPS = 20_000


def _expansion_step_unitaries(p: SystemParams, n_steps: int) -> np.ndarray:
    """Per-slice exponentials exp(-i*dt*H(t_mid)) for the expansion ramp."""
    dt = p.tau / n_steps
    t_mid = (np.arange(n_steps) + 0.5) * dt
    nu = p.nu_cold * (1.0 - t_mid / p.tau) + p.nu_hot * (t_mid / p.tau)
    phase = p.omega * t_mid
    cx = -np.pi * nu * np.cos(phase)
    cy = -np.pi * nu * np.sin(phase)
    cz = np.full_like(t_mid, 0.5 * p.omega_tilde)
    r = np.sqrt(cx * cx + cy * cy + cz * cz)
    a = np.cos(dt * r)
    b = np.sin(dt * r) / r          # r > 0 always: nu_cold > 0
    u = np.empty((n_steps, 2, 2), dtype=complex)
    u[:, 0, 0] = a - 1j * b * cz
    u[:, 1, 1] = a + 1j * b * cz
    u[:, 0, 1] = -1j * b * (cx - 1j * cy)
    u[:, 1, 0] = -1j * b * (cx + 1j * cy)
    return u


def _ordered_product(factors: np.ndarray) -> np.ndarray:
    """Product factors[-1] @ ... @ factors[0] by pairwise reduction."""
    seq = factors
    while seq.shape[0] > 1:
        n = seq.shape[0]
        paired = np.matmul(seq[1:n - n % 2:2], seq[0:n - n % 2:2])
        if n % 2:
            seq = np.concatenate([paired, seq[-1:]], axis=0)
        else:
            seq = paired
    return seq[0]


def propagate_unitary(p: SystemParams, stroke: Stroke,
                      n_steps: int = DEFAULT_N_STEPS) -> np.ndarray:
    """Time-ordered propagator of a work stroke (expansion or compression)."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if stroke is Stroke.EXPANSION:
        return _ordered_product(_expansion_step_unitaries(p, n_steps))
    if stroke is Stroke.COMPRESSION:
        return dag(propagate_unitary(p, Stroke.EXPANSION, n_steps))
    raise ValueError(f"no propagator for stroke {stroke.value}")


def product_propagator(h_of_t: Callable[[float], np.ndarray], tau: float,
                       n_steps: int) -> np.ndarray:
    """Generic midpoint-product propagator for an arbitrary H(t).

    Slow scalar loop; used for cross-checks of the vectorized ramp path.
    """
    dt = tau / n_steps
    u = IDENTITY.copy()
    for k in range(n_steps):
        u = expm_aherm(h_of_t((k + 0.5) * dt), dt) @ u
    return u


def adiabaticity(p: SystemParams, n_steps: int = DEFAULT_N_STEPS) -> float:
    """Probability of crossing between eigenstate branches during the ramp.

    Zero for a perfectly adiabatic ramp; both matrix elements that define it
    agree by unitarity and are checked against each other.
    """
    u = propagate_unitary(p, Stroke.EXPANSION, n_steps)
    cold = herm_eig2(hamiltonian_cold(p))
    hot = herm_eig2(hamiltonian_hot(p))
    xi_a = abs(np.vdot(hot.v_plus, u @ cold.v_minus)) ** 2
    xi_b = abs(np.vdot(hot.v_minus, u @ cold.v_plus)) ** 2
    if abs(xi_a - xi_b) > 1e-9:
        raise RuntimeError(
            f"branch-crossing probabilities disagree: {xi_a} vs {xi_b}")
    return float(xi_a)


@dataclass(frozen=True)
class Trajectory:
    """Sampled open-system evolution with per-sample health metrics."""

    times: np.ndarray
    states: np.ndarray       # (T, 2, 2) complex, Hermitian by construction
    trace_dev: np.ndarray    # |Tr rho - 1| per sample
    min_eig: np.ndarray      # smallest eigenvalue per sample

    def __post_init__(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0.0):
            raise ValueError("trajectory grid must be strictly increasing")
        if self.states.shape != (self.times.size, 2, 2):
            raise ValueError("states shape does not match grid")

    def state_at(self, i: int, pos_tol: float = 1e-8) -> DensityMatrix:
        return DensityMatrix.from_matrix(self.states[i], pos_tol=pos_tol)

    def populations(self, v_plus: np.ndarray) -> np.ndarray:
        """Excited-state weight <v+|rho(t)|v+> along the trajectory."""
        return np.einsum("i,tij,j->t", v_plus.conj(), self.states,
                         v_plus).real

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def apply_generator(rho: np.ndarray, h_sys: np.ndarray, jump: np.ndarray,
                    big_gamma: float, gamma_tilde: float) -> np.ndarray:
    """One application of the master-equation right-hand side."""
    a = jump
    ad = dag(a)
    ada = ad @ a
    aad = a @ ad
    comm = -1j * (h_sys @ rho - rho @ h_sys)
    diss = (big_gamma * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
            + gamma_tilde * (ad @ rho @ a - 0.5 * (aad @ rho + rho @ aad)))
    return comm + diss


def evolve_open(rho0: DensityMatrix, h_sys: np.ndarray, rates: RateTrajectory,
                jump: np.ndarray, grid: np.ndarray, rtol: float = 1e-9,
                atol: float = 1e-12, pos_tol: float = 1e-8) -> Trajectory:
    """Integrate the heating-stroke master equation over the given grid.

    grid must start at 0 (bath switch-on) and stay inside the domain of the
    rate table.  Sampled states are returned at exactly the grid times.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must start at 0 and increase strictly")
    if grid[-1] > rates.times[-1] * (1.0 + 1e-12):
        raise ValueError(
            f"grid end {grid[-1]} exceeds rate table end {rates.times[-1]}")

    rate_spline = CubicSpline(rates.times,
                              np.column_stack([rates.big_gamma,
                                               rates.gamma_tilde]))
    a = np.asarray(jump, dtype=complex)
    ad = dag(a)
    ada = ad @ a
    aad = a @ ad
    h = np.asarray(h_sys, dtype=complex)
    paulis = np.stack([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = 0.5 * (y[0] * paulis[0] + y[1] * paulis[1]
                     + y[2] * paulis[2] + y[3] * paulis[3])
        bg, gt = rate_spline(t)
        drho = (-1j * (h @ rho - rho @ h)
                + bg * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
                + gt * (ad @ rho @ a - 0.5 * (aad @ rho + rho @ aad)))
        return np.array([np.trace(drho).real,
                         np.trace(drho @ SIGMA_X).real,
                         np.trace(drho @ SIGMA_Y).real,
                         np.trace(drho @ SIGMA_Z).real])

    m0 = rho0.mat
    y0 = np.array([np.trace(m0).real,
                   np.trace(m0 @ SIGMA_X).real,
                   np.trace(m0 @ SIGMA_Y).real,
                   np.trace(m0 @ SIGMA_Z).real])
    sol = solve_ivp(rhs, (grid[0], grid[-1]), y0, method="RK45",
                    t_eval=grid, rtol=rtol, atol=atol,
                    max_step=min(0.05, max(grid[-1] / 10.0, 1e-6)))
    if not sol.success:
        raise RuntimeError(
            f"open-system integration failed near t={sol.t[-1]:.6g} ms: "
            f"{sol.message}")

    y = sol.y                        # (4, T)
    states = 0.5 * np.einsum("kt,kij->tij", y, paulis)
    trace_dev = np.abs(y[0] - 1.0)
    if np.max(trace_dev) > 1e-8:
        raise RuntimeError(
            f"trace drift {np.max(trace_dev):.3e} exceeds tolerance 1e-8")
    bloch_norm = np.sqrt(y[1] ** 2 + y[2] ** 2 + y[3] ** 2)
    min_eig = 0.5 * (y[0] - bloch_norm)
    return Trajectory(grid, states, trace_dev, min_eig)
