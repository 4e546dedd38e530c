"""Two-level emitter under a square drive pulse: eta1 and the trade-off sweep.

The emitter decays at rate gamma (fixed to 1, setting the time unit) and is
driven resonantly by a square pulse of area Theta and width
tau = Theta^2 / (4 gamma alpha_sq), i.e. Rabi frequency
Omega = 4 gamma alpha_sq / Theta. Collecting only light emitted after the
pulse ends makes the single-photon probability equal to the excited-state
population at t = tau.

``eta1_analytic`` is the damped-Rabi transient

    eta1 = (Omega^2 / (gamma^2 + 2 Omega^2))
           * [1 - (cos(Omega' tau) + (3 gamma / (4 Omega')) sin(Omega' tau))
              * exp(-3 gamma tau / 4)],
    Omega' = sqrt(Omega^2 - (gamma/4)^2),

evaluated through complex arithmetic so the overdamped branch
(Omega < gamma/4) comes out automatically. ``eta1_numeric`` integrates the
master equation with a fixed-step RK4 scheme and acts as the independent
oracle for the closed form.

Security amplification needs eta1 > p2(alpha_sq); sweeping the maximised
eta1 against p2 locates the largest usable intensity (the gap's unique zero
crossing near alpha_sq = 2.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pulses import at_least_one_prob, multiphoton_prob

DEFAULT_STEP_FACTOR = 1e-4
MAX_STEP_FACTOR = 1e-3
THETA_GRID_POINTS = 400
GOLDEN_TOL = 1e-6

# Measured exciton inversion probabilities from weak-pulse quantum-dot
# experiments, used as reference annotations only (never as model outputs).
EXPERIMENTAL_POINTS = ((3.8, 0.62), (8.6, 0.81))


@dataclass(frozen=True)
class DriveParams:
    """Square-pulse drive at a given intensity: area Theta, derived tau/Omega."""

    alpha_sq: float
    theta_pulse: float  # pulse area in radians
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha_sq <= 0 or self.theta_pulse <= 0 or self.gamma <= 0:
            raise ValueError("alpha_sq, theta_pulse and gamma must all be positive")

    @property
    def tau(self) -> float:
        return self.theta_pulse**2 / (4.0 * self.gamma * self.alpha_sq)

    @property
    def omega(self) -> float:
        return self.theta_pulse / self.tau


@dataclass(frozen=True)
class SweepRow:
    alpha_sq: float
    eta1_max: float
    theta_star: float
    tau_star: float
    p1: float
    p2: float
    gap_emitter: float
    gap_ideal: float


def _eta1_closed_form(omega: np.ndarray, tau: np.ndarray, gamma: float) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(tau, dtype=float)
    steady = omega**2 / (gamma**2 + 2.0 * omega**2)
    op = np.sqrt(omega.astype(complex) ** 2 - (gamma / 4.0) ** 2)
    x = op * tau
    # sin(x)/op -> tau as op -> 0; series keeps the degenerate point smooth
    small = np.abs(op) < 1e-9
    sin_over = np.where(small, tau * (1.0 - x * x / 6.0), np.sin(x) / np.where(small, 1.0, op))
    term = np.cos(x) + (3.0 * gamma / 4.0) * sin_over
    value = steady * (1.0 - term.real * np.exp(-3.0 * gamma * tau / 4.0))
    return value


def eta1_analytic(params: DriveParams) -> float:
    """Excited-state population at the end of the square pulse (closed form)."""
    return float(_eta1_closed_form(params.omega, params.tau, params.gamma))


def _bloch_rk4(omega: np.ndarray, tau: np.ndarray, gamma: float, dt_max: np.ndarray) -> np.ndarray:
    """RK4 integration of (rho_gg, rho_ee, Re rho_ge, Im rho_ge) over [0, tau].

    Vectorized over parameter points; every point takes the same number of
    steps with its own dt <= dt_max.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    dt_max = np.atleast_1d(np.asarray(dt_max, dtype=float))
    n_steps = int(np.max(np.ceil(tau / dt_max)))
    dt = tau / n_steps
    rgg = np.ones_like(omega)
    ree = np.zeros_like(omega)
    u = np.zeros_like(omega)
    v = np.zeros_like(omega)

    def deriv(rgg, ree, u, v):
        d_ree = omega * v - gamma * ree
        d_rgg = -omega * v + gamma * ree
        d_u = -(gamma / 2.0) * u
        d_v = -(omega / 2.0) * (ree - rgg) - (gamma / 2.0) * v
        return d_rgg, d_ree, d_u, d_v

    for _ in range(n_steps):
        k1 = deriv(rgg, ree, u, v)
        k2 = deriv(*(s + 0.5 * dt * k for s, k in zip((rgg, ree, u, v), k1)))
        k3 = deriv(*(s + 0.5 * dt * k for s, k in zip((rgg, ree, u, v), k2)))
        k4 = deriv(*(s + dt * k for s, k in zip((rgg, ree, u, v), k3)))
        rgg, ree, u, v = (
            s + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for s, a, b, c, d in zip((rgg, ree, u, v), k1, k2, k3, k4)
        )
    return ree


def eta1_numeric(params: DriveParams, dt: float | None = None) -> float:
    """Master-equation oracle: integrate the driven two-level system to t = tau."""
    scale = max(params.gamma, params.omega)
    if dt is None:
        dt = DEFAULT_STEP_FACTOR / scale
    if dt > MAX_STEP_FACTOR / scale:
        raise ValueError(
            f"step {dt} too large for stability; need dt <= {MAX_STEP_FACTOR / scale}"
        )
    return float(_bloch_rk4(params.omega, params.tau, params.gamma, np.asarray(dt))[0])


def eta1_numeric_grid(
    alpha_sqs: np.ndarray, thetas: np.ndarray, gamma: float = 1.0,
    step_factor: float = DEFAULT_STEP_FACTOR,
) -> np.ndarray:
    """Vectorized oracle over a flat list of (alpha_sq, theta_pulse) points."""
    alpha_sqs = np.asarray(alpha_sqs, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    tau = thetas**2 / (4.0 * gamma * alpha_sqs)
    omega = thetas / tau
    dt_max = step_factor / np.maximum(gamma, omega)
    return _bloch_rk4(omega, tau, gamma, dt_max)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def maximize_eta1(alpha_sq: float, gamma: float = 1.0) -> tuple[float, float]:
    """Maximise eta1 over the pulse area: 400-point grid scan plus golden refine.

    Returns (eta1_star, theta_star).
    """
    if alpha_sq <= 0:
        raise ValueError("alpha_sq must be positive")
    thetas = np.linspace(2.0 * math.pi / THETA_GRID_POINTS, 2.0 * math.pi, THETA_GRID_POINTS)
    tau = thetas**2 / (4.0 * gamma * alpha_sq)
    vals = _eta1_closed_form(thetas / tau, tau, gamma)
    i = int(np.argmax(vals))
    lo = thetas[max(0, i - 1)]
    hi = thetas[min(THETA_GRID_POINTS - 1, i + 1)]

    def f(th: float) -> float:
        return eta1_analytic(DriveParams(alpha_sq, th, gamma))

    theta_star = _golden_section_max(f, lo, hi, GOLDEN_TOL)
    return f(theta_star), theta_star


def _eta1_max_for_model(alpha_sq: float, model: str, coupling: float, gamma: float):
    if model == "two_level":
        eta1, theta_star = maximize_eta1(alpha_sq, gamma)
        tau_star = theta_star**2 / (4.0 * gamma * alpha_sq)
        return eta1, theta_star, tau_star
    if model == "ideal_lambda":
        return coupling * at_least_one_prob(alpha_sq), math.nan, math.nan
    raise ValueError(f"unknown emitter model {model!r}")


def security_gap_sweep(
    alpha_range,
    model: str = "two_level",
    coupling: float = 1.0,
    gamma: float = 1.0,
) -> list[SweepRow]:
    """Per-intensity maximised eta1, coherent-state bounds, and both gaps."""
    alphas = list(alpha_range)
    if not alphas:
        raise ValueError("alpha range is empty")
    if model == "ideal_lambda" and not 0.0 < coupling <= 1.0:
        raise ValueError("coupling must be in (0, 1]")
    rows = []
    for a in alphas:
        eta1, theta_star, tau_star = _eta1_max_for_model(a, model, coupling, gamma)
        p1 = at_least_one_prob(a)
        p2 = multiphoton_prob(a)
        rows.append(
            SweepRow(
                alpha_sq=a,
                eta1_max=eta1,
                theta_star=theta_star,
                tau_star=tau_star,
                p1=p1,
                p2=p2,
                gap_emitter=eta1 - p2,
                gap_ideal=p1 - p2,
            )
        )
    return rows


def find_security_crossing(
    lo: float = 0.1,
    hi: float = 10.0,
    gamma: float = 1.0,
    tol: float = 1e-6,
) -> SweepRow:
    """Bisection for the zero of eta1_max(alpha_sq) - p2(alpha_sq)."""

    def gap(a: float) -> float:
        eta1, _ = maximize_eta1(a, gamma)
        return eta1 - multiphoton_prob(a)

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo <= 0 or g_hi >= 0:
        raise ValueError(
            f"no sign change on [{lo}, {hi}]: gap({lo})={g_lo}, gap({hi})={g_hi}"
        )
    a, b = lo, hi
    while b - a > tol:
        mid = (a + b) / 2.0
        if gap(mid) > 0:
            a = mid
        else:
            b = mid
    star = (a + b) / 2.0
    return security_gap_sweep([star], "two_level", gamma=gamma)[0]
