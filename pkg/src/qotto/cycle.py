"""Four-stroke engine orchestration.

One run builds the thermal input state, drives it through the frequency
ramp, evolves it in contact with the inverted-population reservoir while
sampling every truncation time on a grid, and closes the cycle at each
sample with the exact inverse ramp.  Efficiency versus truncation time
comes out of a single dissipative trajectory because the closing stroke
is unitary: measuring the ramped-back state under the cold Hamiltonian
equals measuring the untouched state under the pulled-back operator.

Sweeps fan the independent parameter points over a process pool and
reassemble rows in input order, so output is deterministic for a fixed
configuration.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import BathSpec, RateTrajectory, Statistics, build_rate_trajectory
from .dynamics import (DEFAULT_N_STEPS, Trajectory, adiabaticity, evolve_open,
                       propagate_unitary)
from .matcore import DensityMatrix, dag, expect
from .measures import (NonMarkovReport, cycle_energetics, nonmarkov_report,
                       overall_performance)
from .model import (Stroke, SystemParams, beta_from_population,
                    hamiltonian_cold, hamiltonian_hot, jump_operator,
                    state_from_population, transition_energy)

__all__ = [
    "CycleConfig",
    "CycleResult",
    "PopulationRow",
    "SweepRow",
    "build_config",
    "ift_reference",
    "population_onset",
    "run_cooling",
    "run_cycle",
    "sweep_cutoff",
    "sweep_population",
]

# samples with |q_hot| below this multiple of the transition energy are
# treated as "no heat exchanged yet": eta is NaN there and scores zero
# in the time average
Q_HOT_FLOOR_SCALE = 1e-9

# half-depth defining the reported window around the efficiency maximum
PEAK_BAND = 5e-4

# trailing average window for the saturation value, ms
SAT_WINDOW = 1.0

# |eta - eta_sat| threshold for the equilibration-time estimate
EQ_TOL = 1e-3

# extra rate-table coverage past the last evolution time, ms
_TABLE_MARGIN = 0.05


@dataclass(frozen=True)
class CycleConfig:
    """Everything one engine run needs.

    The contact-stroke grid is dense (spacing `heat_dt`) up to
    `heat_t_dense` and sparse (spacing `tail_dt`) out to `heat_t_max`;
    the dense part resolves the efficiency oscillations, the tail pins
    the saturation value.  `cold_bath` only enters the optional
    restoring stroke, never the first-cycle efficiency.
    """

    system: SystemParams
    hot_bath: BathSpec
    cold_bath: BathSpec
    p_plus_cold: float
    p_plus_hot: float
    heat_dt: float = 0.25e-3
    heat_t_dense: float = 1.0
    tail_dt: float = 0.01
    heat_t_max: float = 10.0
    t_f: float = 1.0
    n_steps: int = DEFAULT_N_STEPS
    quad_tol: float = 1e-8
    ode_rtol: float = 1e-9
    ode_atol: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.p_plus_cold < 0.5:
            raise ValueError("p_plus_cold must lie in [0, 0.5): the cold "
                             "stage is a positive-temperature reservoir")
        if not 0.0 < self.p_plus_hot < 1.0:
            raise ValueError("p_plus_hot must lie in (0, 1)")
        if self.hot_bath.statistics is not Statistics.FERMIONIC:
            raise ValueError("hot reservoir must be fermionic: population "
                             "inversion needs a bounded single-mode spectrum")
        if self.heat_dt <= 0.0 or self.tail_dt <= 0.0:
            raise ValueError("grid spacings must be positive")
        if not 0.0 < self.heat_t_dense <= self.heat_t_max:
            raise ValueError("need 0 < heat_t_dense <= heat_t_max")
        if not 0.0 < self.t_f <= self.heat_t_max:
            raise ValueError("t_f must lie in (0, heat_t_max]")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")

    def heating_grid(self) -> np.ndarray:
        n_dense = int(round(self.heat_t_dense / self.heat_dt))
        dense = np.linspace(0.0, self.heat_t_dense, n_dense + 1)
        if self.heat_t_max == self.heat_t_dense:
            return dense
        n_tail = int(round((self.heat_t_max - self.heat_t_dense) / self.tail_dt))
        n_tail = max(n_tail, 1)
        tail = np.linspace(self.heat_t_dense, self.heat_t_max, n_tail + 1)[1:]
        return np.concatenate([dense, tail])


def build_config(nu_cold: float = 2.0, nu_hot: float = 3.6,
                 tau: float = 0.1, g: float = 0.2,
                 p_plus_cold: float = 0.261, p_plus_hot: float = 0.99,
                 alpha: float = 0.6, omega_c: float = 30.0, mu: float = 0.0,
                 cold_alpha: float | None = None,
                 cold_omega_c: float | None = None,
                 cold_mu: float | None = None,
                 **kwargs) -> CycleConfig:
    """Assemble a config from scalar knobs.

    Both reservoir temperatures are derived from the stroke target
    populations, so the two-point state the contact stroke relaxes
    toward is exactly the configured one.  Cold-side spectral
    parameters default to the hot-side values unless overridden.
    Remaining keyword arguments pass through to CycleConfig.
    """
    system = SystemParams(nu_cold=nu_cold, nu_hot=nu_hot, tau=tau, g=g)
    if not 0.0 < p_plus_cold < 0.5:
        raise ValueError("p_plus_cold must lie in (0, 0.5)")
    if not 0.0 < p_plus_hot < 1.0:
        raise ValueError("p_plus_hot must lie in (0, 1)")
    beta_hot = beta_from_population(hamiltonian_hot(system), p_plus_hot)
    beta_cold = beta_from_population(hamiltonian_cold(system), p_plus_cold)
    hot = BathSpec(alpha=alpha, omega_c=omega_c, beta=beta_hot, mu=mu)
    cold = BathSpec(alpha=alpha if cold_alpha is None else cold_alpha,
                    omega_c=omega_c if cold_omega_c is None else cold_omega_c,
                    beta=beta_cold,
                    mu=mu if cold_mu is None else cold_mu)
    return CycleConfig(system=system, hot_bath=hot, cold_bath=cold,
                       p_plus_cold=p_plus_cold, p_plus_hot=p_plus_hot,
                       **kwargs)


@dataclass(frozen=True)
class CycleResult:
    """Sampled energetics plus the derived summary numbers.

    `eta` is NaN wherever the heat floor applies.  `peaks` holds the
    refined local efficiency maxima (time, value) in time order over
    operating samples; `window` brackets the global maximum at depth
    PEAK_BAND.  On `no_engine` runs every summary scalar is NaN and
    `peaks` is empty.
    """

    config: CycleConfig
    w1: float
    times: np.ndarray
    w2: np.ndarray
    q_hot: np.ndarray
    eta: np.ndarray
    valid: np.ndarray
    eta_max: float
    t_tilde_max: float
    window: tuple
    peaks: tuple
    eta_sat: float
    t_eq: float
    o_p: float
    nonmarkov: NonMarkovReport
    eta_ift: float
    no_engine: bool
    diagnostics: dict = field(repr=False)


def _refine_peak(times: np.ndarray, eta: np.ndarray, k: int) -> tuple[float, float]:
    """Quadratic vertex through the three samples bracketing index k."""
    t0, t1, t2 = times[k - 1:k + 2]
    y0, y1, y2 = eta[k - 1:k + 2]
    if not (np.isfinite(y0) and np.isfinite(y2)):
        return float(times[k]), float(eta[k])
    den = (y0 * (t1 - t2) + y1 * (t2 - t0) + y2 * (t0 - t1))
    if den <= 0.0:
        # flat or concave-up triple: keep the grid sample
        return float(times[k]), float(eta[k])
    ts = (y0 * (t1 * t1 - t2 * t2) + y1 * (t2 * t2 - t0 * t0)
          + y2 * (t0 * t0 - t1 * t1)) / (2.0 * den)
    ts = min(max(ts, t0), t2)
    # Lagrange evaluation at the vertex
    ys = (y0 * (ts - t1) * (ts - t2) / ((t0 - t1) * (t0 - t2))
          + y1 * (ts - t0) * (ts - t2) / ((t1 - t0) * (t1 - t2))
          + y2 * (ts - t0) * (ts - t1) / ((t2 - t0) * (t2 - t1)))
    return float(ts), float(ys)


def _band_edges(times: np.ndarray, eta: np.ndarray, k: int,
                threshold: float) -> tuple[float, float]:
    """Connected interval around sample k where eta stays >= threshold,
    edges placed by linear interpolation to the crossing."""
    n = times.size
    lo = k
    while lo > 0 and np.isfinite(eta[lo - 1]) and eta[lo - 1] >= threshold:
        lo -= 1
    hi = k
    while hi < n - 1 and np.isfinite(eta[hi + 1]) and eta[hi + 1] >= threshold:
        hi += 1
    if lo > 0 and np.isfinite(eta[lo - 1]):
        frac = (threshold - eta[lo - 1]) / (eta[lo] - eta[lo - 1])
        t_lo = times[lo - 1] + frac * (times[lo] - times[lo - 1])
    else:
        t_lo = times[lo]
    if hi < n - 1 and np.isfinite(eta[hi + 1]):
        frac = (eta[hi] - threshold) / (eta[hi] - eta[hi + 1])
        t_hi = times[hi] + frac * (times[hi + 1] - times[hi])
    else:
        t_hi = times[hi]
    return float(t_lo), float(t_hi)


def run_cycle(cfg: CycleConfig) -> CycleResult:
    """Run one engine cycle over every truncation time on the grid."""
    sp = cfg.system
    h_cold = hamiltonian_cold(sp)
    h_hot = hamiltonian_hot(sp)
    eps_hot, _ = transition_energy(h_hot)
    rho_in = state_from_population(h_cold, cfg.p_plus_cold)
    u_exp = propagate_unitary(sp, Stroke.EXPANSION, cfg.n_steps)
    rho_exp = u_exp @ rho_in.mat @ dag(u_exp)
    jump = jump_operator(h_hot)

    grid = cfg.heating_grid()
    rates = build_rate_trajectory(cfg.hot_bath, eps_hot,
                                  grid[-1] + _TABLE_MARGIN,
                                  quad_tol=cfg.quad_tol)
    traj = evolve_open(DensityMatrix.from_matrix(rho_exp), h_hot, rates,
                       jump, grid, rtol=cfg.ode_rtol, atol=cfg.ode_atol)

    w1 = expect(h_hot, rho_exp) - expect(h_cold, rho_in.mat)
    # the closing stroke never needs to be propagated: undoing the ramp
    # and measuring under h_cold equals measuring the pulled-back
    # operator on the contact-stroke state directly
    m2 = u_exp @ h_cold @ dag(u_exp) - h_hot
    e_exp = expect(h_hot, rho_exp)
    w2 = np.einsum("tij,ji->t", traj.states, m2).real.astype(float)
    q_hot = np.einsum("tij,ji->t", traj.states, h_hot).real - e_exp
    w = w1 + w2
    floor = Q_HOT_FLOOR_SCALE * eps_hot
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(np.abs(q_hot) > floor, -w / q_hot, np.nan)
    valid = (w < 0.0) & (q_hot > 0.0)

    # operating = delivering work against heat actually taken in;
    # float dust around a zero-coupling run must not count
    operating = valid & (q_hot > floor) & np.isfinite(eta)
    no_engine = not bool(operating.any())

    tail = eta[grid >= grid[-1] - SAT_WINDOW + 1e-12]
    tail = tail[np.isfinite(tail)]
    eta_sat = float(tail.mean()) if tail.size else float("nan")

    peaks: list[tuple[float, float]] = []
    eta_max = t_tilde_max = float("nan")
    window = (float("nan"), float("nan"))
    if not no_engine:
        score = np.where(operating & (eta < 1.0), eta, -np.inf)
        fin = np.isfinite(score)
        is_pk = np.zeros(grid.size, dtype=bool)
        # both neighbors must be operating samples too, else a curve
        # entering the operating region reports its first sample as a peak
        is_pk[1:-1] = (fin[1:-1] & fin[:-2] & fin[2:]
                       & (score[1:-1] > score[:-2])
                       & (score[1:-1] >= score[2:]))
        for k in np.nonzero(is_pk)[0]:
            peaks.append(_refine_peak(grid, eta, int(k)))
        k_max = int(np.argmax(score))
        if np.isfinite(score[k_max]):
            # refinement can only raise the grid maximum, never lose it
            t_tilde_max, eta_max = float(grid[k_max]), float(eta[k_max])
            for t_p, v_p in peaks:
                if v_p > eta_max:
                    t_tilde_max, eta_max = t_p, v_p
            window = _band_edges(grid, eta, k_max, eta_max - PEAK_BAND)

    dev_ok = np.isfinite(eta) & (np.abs(eta - eta_sat) < EQ_TOL)
    bad = np.nonzero(~dev_ok)[0]
    if bad.size == 0:
        t_eq = float(grid[0])
    elif bad[-1] + 1 < grid.size:
        t_eq = float(grid[bad[-1] + 1])
    else:
        t_eq = float("nan")

    o_p = overall_performance(grid, eta, cfg.t_f)
    nm = nonmarkov_report(rates, 0.0, cfg.heat_t_max)

    rho_heat_ideal = state_from_population(h_hot, cfg.p_plus_hot).mat
    ideal = cycle_energetics(rho_in.mat, rho_exp, rho_heat_ideal,
                             dag(u_exp) @ rho_heat_ideal @ u_exp,
                             h_cold, h_hot)

    diagnostics = {
        "quad_error": float(rates.quad_error),
        "weak_coupling_ok": bool(rates.weak_coupling_ok),
        "max_trace_dev": float(np.max(traj.trace_dev)),
        "min_eig": float(np.min(traj.min_eig)),
        "xi": float(adiabaticity(sp, cfg.n_steps)),
        "eps_hot": float(eps_hot),
        "final_population_gap": float(
            abs(traj.populations(transition_energy(h_hot)[1].v_plus)[-1]
                - cfg.p_plus_hot)),
    }
    return CycleResult(config=cfg, w1=float(w1), times=grid,
                       w2=w2, q_hot=q_hot, eta=eta, valid=valid,
                       eta_max=eta_max, t_tilde_max=t_tilde_max,
                       window=window, peaks=tuple(peaks),
                       eta_sat=eta_sat, t_eq=t_eq, o_p=float(o_p),
                       nonmarkov=nm, eta_ift=float(ideal.eta),
                       no_engine=no_engine, diagnostics=diagnostics)


def run_cooling(cfg: CycleConfig, rho_comp, t_max: float = 40.0,
                dt: float = 0.01) -> Trajectory:
    """Restoring stroke: contact with the cold reservoir under the cold
    Hamiltonian.  Long runs approach the configured cold thermal state;
    this stroke never enters the first-cycle efficiency."""
    sp = cfg.system
    h_cold = hamiltonian_cold(sp)
    eps_cold, _ = transition_energy(h_cold)
    rho0 = rho_comp if isinstance(rho_comp, DensityMatrix) \
        else DensityMatrix.from_matrix(np.asarray(rho_comp, dtype=complex))
    if t_max == 0.0:
        times = np.zeros(1)
        states = rho0.mat[None, :, :]
        return Trajectory(times=times, states=states,
                          trace_dev=np.zeros(1),
                          min_eig=np.full(1, rho0.min_eig))
    jump = jump_operator(h_cold)
    rates = build_rate_trajectory(cfg.cold_bath, eps_cold,
                                  t_max + _TABLE_MARGIN,
                                  quad_tol=cfg.quad_tol)
    grid = np.linspace(0.0, t_max, int(round(t_max / dt)) + 1)
    return evolve_open(rho0, h_cold, rates, jump, grid,
                       rtol=cfg.ode_rtol, atol=cfg.ode_atol)


@dataclass(frozen=True)
class SweepRow:
    omega_c: float
    eta_max: float
    t_tilde_max: float
    o_p: float
    q_nonmarkov: float
    eta_sat: float
    no_engine: bool
    error: str = ""


def _cutoff_point(args) -> SweepRow:
    cfg, omega_c = args
    try:
        sub = replace(cfg, hot_bath=replace(cfg.hot_bath, omega_c=omega_c))
        res = run_cycle(sub)
        return SweepRow(omega_c=omega_c, eta_max=res.eta_max,
                        t_tilde_max=res.t_tilde_max, o_p=res.o_p,
                        q_nonmarkov=res.nonmarkov.q_total,
                        eta_sat=res.eta_sat, no_engine=res.no_engine)
    except Exception as exc:  # a failed point must not kill the sweep
        nan = float("nan")
        return SweepRow(omega_c=omega_c, eta_max=nan, t_tilde_max=nan,
                        o_p=nan, q_nonmarkov=nan, eta_sat=nan,
                        no_engine=True,
                        error=f"{type(exc).__name__}: {exc}")


def _run_pool(fn, jobs, workers: int | None):
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # executor.map keeps submission order, so rows stay deterministic
        return list(pool.map(fn, jobs))


def sweep_cutoff(cfg: CycleConfig, omega_c_list,
                 workers: int | None = None) -> list[SweepRow]:
    """One full run per reservoir cutoff, rows in input order."""
    points = [float(w) for w in omega_c_list]
    if not points:
        raise ValueError("cutoff list must not be empty")
    return _run_pool(_cutoff_point, [(cfg, w) for w in points], workers)


@dataclass(frozen=True)
class PopulationRow:
    p_plus_hot: float
    eta: float
    valid_engine: bool
    w: float
    q_hot: float
    error: str = ""


def _population_point(args) -> PopulationRow:
    cfg, p_hot, t_tilde = args
    try:
        sp = cfg.system
        h_cold = hamiltonian_cold(sp)
        h_hot = hamiltonian_hot(sp)
        eps_hot, _ = transition_energy(h_hot)
        # each target population sets its own reservoir temperature
        hot = replace(cfg.hot_bath,
                      beta=beta_from_population(h_hot, p_hot))
        rho_in = state_from_population(h_cold, cfg.p_plus_cold)
        u_exp = propagate_unitary(sp, Stroke.EXPANSION, cfg.n_steps)
        rho_exp = u_exp @ rho_in.mat @ dag(u_exp)
        rates = build_rate_trajectory(hot, eps_hot, t_tilde + _TABLE_MARGIN,
                                      quad_tol=cfg.quad_tol)
        n = max(1, int(round(t_tilde / cfg.heat_dt)))
        grid = np.linspace(0.0, t_tilde, n + 1)
        traj = evolve_open(DensityMatrix.from_matrix(rho_exp), h_hot, rates,
                           jump_operator(h_hot), grid,
                           rtol=cfg.ode_rtol, atol=cfg.ode_atol)
        rho_heat = traj.states[-1]
        en = cycle_energetics(rho_in.mat, rho_exp, rho_heat,
                              dag(u_exp) @ rho_heat @ u_exp, h_cold, h_hot)
        return PopulationRow(p_plus_hot=p_hot, eta=en.eta,
                             valid_engine=en.valid_engine,
                             w=en.w, q_hot=en.q_hot)
    except Exception as exc:
        nan = float("nan")
        return PopulationRow(p_plus_hot=p_hot, eta=nan, valid_engine=False,
                             w=nan, q_hot=nan,
                             error=f"{type(exc).__name__}: {exc}")


def sweep_population(cfg: CycleConfig, p_hot_grid, t_tilde: float,
                     workers: int | None = None) -> list[PopulationRow]:
    """Truncated-contact efficiency at fixed stroke duration t_tilde,
    one row per target population, rows in input order."""
    points = [float(p) for p in p_hot_grid]
    if not points:
        raise ValueError("population grid must not be empty")
    if any(not 0.0 < p < 1.0 for p in points):
        raise ValueError("populations must lie in (0, 1)")
    if not 0.0 < t_tilde <= cfg.heat_t_max:
        raise ValueError("t_tilde must lie inside the heating window")
    return _run_pool(_population_point,
                     [(cfg, p, float(t_tilde)) for p in points], workers)


def ift_reference(cfg: CycleConfig, p_hot_grid) -> list[PopulationRow]:
    """Perfect-thermalization reference: the contact stroke is replaced
    by its infinite-time endpoint, no reservoir dynamics involved."""
    points = [float(p) for p in p_hot_grid]
    if not points:
        raise ValueError("population grid must not be empty")
    if any(not 0.0 < p < 1.0 for p in points):
        raise ValueError("populations must lie in (0, 1)")
    sp = cfg.system
    h_cold = hamiltonian_cold(sp)
    h_hot = hamiltonian_hot(sp)
    rho_in = state_from_population(h_cold, cfg.p_plus_cold)
    u_exp = propagate_unitary(sp, Stroke.EXPANSION, cfg.n_steps)
    rho_exp = u_exp @ rho_in.mat @ dag(u_exp)
    rows = []
    for p in points:
        rho_heat = state_from_population(h_hot, p).mat
        en = cycle_energetics(rho_in.mat, rho_exp, rho_heat,
                              dag(u_exp) @ rho_heat @ u_exp, h_cold, h_hot)
        rows.append(PopulationRow(p_plus_hot=p, eta=en.eta,
                                  valid_engine=en.valid_engine,
                                  w=en.w, q_hot=en.q_hot))
    return rows


def population_onset(rows) -> float:
    """Smallest scanned population with engine operation, NaN if none."""
    for row in sorted(rows, key=lambda r: r.p_plus_hot):
        if row.valid_engine:
            return row.p_plus_hot
    return float("nan")
