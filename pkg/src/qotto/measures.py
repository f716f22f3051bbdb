"""Thermodynamic bookkeeping and reservoir-memory measures.

Work and heat are endpoint trace differences over one cycle: the two
driven strokes exchange only work, the truncated contact stroke only
heat.  The sign convention makes useful output negative, so the
efficiency carries a leading minus sign.  Reservoir memory is scored
by integrating the negative excursions of the decay rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import RateTrajectory
from .matcore import expect

__all__ = [
    "Energetics",
    "NonMarkovReport",
    "cycle_energetics",
    "nonmarkov_report",
    "overall_performance",
    "quantifier_Q",
    "witness_f",
]


def _mat(state) -> np.ndarray:
    # accept a DensityMatrix wrapper or a bare 2x2 array
    return np.asarray(getattr(state, "mat", state), dtype=complex)


@dataclass(frozen=True)
class Energetics:
    """Energy ledger for one cycle, entries in rad/ms (hbar = 1).

    `w` is the sum of the two driven-stroke contributions by
    construction, never stored separately.  `eta` is NaN when no heat
    was exchanged with the hot reservoir.  `valid_engine` is the
    operating test: net work extracted while heat flowed in.
    """

    w1: float
    w2: float
    q_hot: float
    eta: float
    valid_engine: bool

    @property
    def w(self) -> float:
        return self.w1 + self.w2


def cycle_energetics(rho_in, rho_exp, rho_heat, rho_comp,
                     h_cold: np.ndarray, h_hot: np.ndarray) -> Energetics:
    """Score one cycle from its four corner states.

    `rho_in` enters the first driven stroke under `h_cold`, `rho_exp`
    leaves it under `h_hot`, `rho_heat` is the (possibly truncated)
    contact endpoint, and `rho_comp` is that state driven back under
    `h_cold`.  The driven strokes contribute work only; heat is the
    contact-stroke energy change.  Division by `q_hot` is guarded: a
    zero-heat cycle gets eta = NaN rather than an exception.
    """
    ri, re, rh, rc = (_mat(x) for x in (rho_in, rho_exp, rho_heat, rho_comp))
    e_exp = expect(h_hot, re)
    e_heat = expect(h_hot, rh)
    w1 = e_exp - expect(h_cold, ri)
    w2 = expect(h_cold, rc) - e_heat
    q_hot = e_heat - e_exp
    w = w1 + w2
    eta = float("nan") if q_hot == 0.0 else -w / q_hot
    return Energetics(w1=w1, w2=w2, q_hot=q_hot, eta=eta,
                      valid_engine=bool(w < 0.0 and q_hot > 0.0))


def witness_f(rates: RateTrajectory) -> np.ndarray:
    """Memory witness per sample: summed negative parts of the decay
    rates.

    The evolution has exactly two decay channels; the zero-frequency
    (dephasing) channel never develops a rate in this model and so
    cannot contribute.  The witness is nonnegative by construction and
    identically zero for a divisible evolution.
    """
    return (np.maximum(0.0, -rates.big_gamma)
            + np.maximum(0.0, -rates.gamma_tilde))


def _window_trapezoid(times: np.ndarray, values: np.ndarray,
                      t0: float, t1: float) -> float:
    # interpolated edge nodes keep the integral exactly additive when
    # a window is split at an interior point
    i0 = int(np.searchsorted(times, t0, side="right"))
    i1 = int(np.searchsorted(times, t1, side="left"))
    v0 = float(np.interp(t0, times, values))
    v1 = float(np.interp(t1, times, values))
    ts = np.concatenate(([t0], times[i0:i1], [t1]))
    vs = np.concatenate(([v0], values[i0:i1], [v1]))
    return float(0.5 * np.sum((vs[1:] + vs[:-1]) * np.diff(ts)))


def quantifier_Q(times, f, t0: float, t1: float) -> float:
    """Integrated witness over [t0, t1], trapezoid rule on the sampled
    grid.  The window must lie inside the grid; it is not extrapolated.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    if times.ndim != 1 or times.shape != f.shape:
        raise ValueError("times and f must be matching 1-d arrays")
    if not t0 <= t1:
        raise ValueError("window must satisfy t0 <= t1")
    if t0 < times[0] - 1e-12 or t1 > times[-1] + 1e-12:
        raise ValueError("window extends beyond the sampled grid")
    if t1 == t0:
        return 0.0
    return _window_trapezoid(times, f, t0, t1)


@dataclass(frozen=True)
class NonMarkovReport:
    """Witness samples and their integral over a window.

    `q_total` is the raw trapezoid value of `f` (a rate integrated
    over time, dimensionless under the unit choice here); it vanishes
    exactly when the witness never fires on the grid.
    """

    times: np.ndarray
    f: np.ndarray
    big_gamma: np.ndarray
    gamma_tilde: np.ndarray
    q_total: float
    window: tuple

    def __post_init__(self):
        if np.any(self.f < 0.0):
            raise ValueError("witness samples must be nonnegative")
        if not self.q_total >= 0.0:
            raise ValueError("quantifier must be nonnegative")


def nonmarkov_report(rates: RateTrajectory, t0: float = 0.0,
                     t1: float | None = None) -> NonMarkovReport:
    """Witness and quantifier over [t0, t1] (full rate grid by default)."""
    if t1 is None:
        t1 = float(rates.times[-1])
    f = witness_f(rates)
    q = quantifier_Q(rates.times, f, t0, t1)
    return NonMarkovReport(times=rates.times, f=f,
                           big_gamma=rates.big_gamma,
                           gamma_tilde=rates.gamma_tilde,
                           q_total=q, window=(float(t0), float(t1)))


def overall_performance(times, eta_samples, t_f: float) -> float:
    """Time-averaged efficiency over [0, t_f].

    Samples where the efficiency is not finite contribute zero;
    finite negative samples are averaged as they are, no clipping.
    A window reaching past the sampled times is rejected rather than
    extrapolated, and t_f = 0 scores zero by convention.
    """
    times = np.asarray(times, dtype=float)
    eta = np.asarray(eta_samples, dtype=float)
    if times.ndim != 1 or times.shape != eta.shape:
        raise ValueError("times and eta_samples must be matching 1-d arrays")
    if t_f < 0.0:
        raise ValueError("t_f must be nonnegative")
    if times[0] > 0.0:
        raise ValueError("samples must start at t = 0")
    if t_f > times[-1] + 1e-12:
        raise ValueError("t_f extends beyond the sampled window")
    if t_f == 0.0:
        return 0.0
    vals = np.where(np.isfinite(eta), eta, 0.0)
    return _window_trapezoid(times, vals, 0.0, float(t_f)) / float(t_f)
