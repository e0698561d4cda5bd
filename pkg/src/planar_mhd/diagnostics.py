"""Conservation, entropy, dissipation, and norm diagnostics.

All functionals are midpoint-rule integrals over cell centers.  Temperature
divisions are regularized with a documented floor of 1e-30 so vacuum and
cold cells produce large-but-finite entries instead of NaNs.

The companion potential phi tracks the time integral of the effective
pressure ptilde = lambda*u_x - rho*u^2 - P - |b|^2/2 with phi_x = rho*u at
t = 0, so that max_i rho_i * exp(phi_i) is a computable upper-bound monitor
for the density: along exact dynamics d/dt(rho e^phi) <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import kappa, pressure
from .operators import EVEN, ODD, cell_grad, second_diff_onesided

# floor used in every division by theta
THETA_FLOOR = 1e-30


def _grad_sq(field, dx, bc):
    g = cell_grad(field, dx, bc)
    if g.ndim == 2:
        return np.sum(g * g, axis=1)
    return g * g


def total_energy(state, grid, params):
    """Integral of rho*(c_v*theta + (u^2 + |w|^2)/2) + |b|^2/2."""
    kinetic = 0.5 * (state.u * state.u + np.sum(state.w * state.w, axis=1))
    density_part = state.rho * (params.c_v * state.theta + kinetic)
    magnetic = 0.5 * np.sum(state.b * state.b, axis=1)
    return float(np.sum(density_part + magnetic) * grid.dx)


def total_mass(state, grid):
    return float(np.sum(state.rho) * grid.dx)


def entropy_functional(state, grid):
    """Integral of rho*ln(rho) + rho*|ln(theta)|, skipping vacuum cells.

    rho*ln(rho) extends continuously to zero at vacuum.  A positive-density
    cell at exactly zero temperature makes the functional +inf.
    """
    rho, theta = state.rho, state.theta
    pos = rho > 0.0
    if np.any(pos & (theta == 0.0)):
        return float("inf")
    out = np.zeros_like(rho)
    out[pos] = rho[pos] * (np.log(rho[pos]) + np.abs(np.log(theta[pos])))
    return float(np.sum(out) * grid.dx)


def dissipation_increment(state_before, state_after, dt, grid, params):
    """dt-weighted dissipation integrals, evaluated at state_after.

    Returns (viscous, shear, magnetic, heat) with
    heat = dt * integral of kappa(theta) * (theta_x / theta)^2.
    """
    dx = grid.dx
    s = state_after
    visc = params.lambda_visc * np.sum(_grad_sq(s.u, dx, ODD)) * dx
    shear = params.mu_visc * np.sum(_grad_sq(s.w, dx, ODD)) * dx
    mag = params.nu_mag * np.sum(_grad_sq(s.b, dx, ODD)) * dx
    ratio = cell_grad(s.theta, dx, EVEN) / np.maximum(s.theta, THETA_FLOOR)
    heat = float(np.sum(kappa(s.theta, params) * ratio * ratio) * dx)
    return (dt * float(visc), dt * float(shear), dt * float(mag), dt * heat)


def entropy_production_increment(state_before, state_after, dt, grid, params):
    """dt-weighted entropy production: the dissipation integrals divided by
    theta (and theta^2 for the conductive part).  Nonnegative by construction."""
    dx = grid.dx
    s = state_after
    theta_safe = np.maximum(s.theta, THETA_FLOOR)
    mech = (params.lambda_visc * _grad_sq(s.u, dx, ODD)
            + params.mu_visc * _grad_sq(s.w, dx, ODD)
            + params.nu_mag * _grad_sq(s.b, dx, ODD)) / theta_safe
    ratio = cell_grad(s.theta, dx, EVEN) / theta_safe
    cond = kappa(s.theta, params) * ratio * ratio
    return dt * float(np.sum(mech + cond) * dx)


def default_alpha(params):
    """Midpoint of the admissible weight interval (0, min(1, q_exp))."""
    return 0.5 * min(1.0, params.q_exp)


def check_alpha(alpha, params):
    upper = min(1.0, params.q_exp)
    if not 0.0 < alpha < upper:
        raise ValueError(
            f"alpha must lie in the open interval (0, min(1, q_exp)) = (0, {upper:g}),"
            f" got {alpha!r}")
    return float(alpha)


def weighted_dissipation_increment(state_before, state_after, dt, grid, params, alpha):
    """dt-weighted degenerate-dissipation integral

        (lambda u_x^2 + mu |w_x|^2 + nu |b_x|^2) / theta^alpha
            + (1 + theta^q) theta_x^2 / theta^(1+alpha)

    for a weight exponent alpha in (0, min(1, q_exp))."""
    alpha = check_alpha(alpha, params)
    dx = grid.dx
    s = state_after
    theta_safe = np.maximum(s.theta, THETA_FLOOR)
    mech = (params.lambda_visc * _grad_sq(s.u, dx, ODD)
            + params.mu_visc * _grad_sq(s.w, dx, ODD)
            + params.nu_mag * _grad_sq(s.b, dx, ODD)) / theta_safe ** alpha
    tx = cell_grad(s.theta, dx, EVEN)
    cond = (1.0 + theta_safe ** params.q_exp) * tx * tx / theta_safe ** (1.0 + alpha)
    return dt * float(np.sum(mech + cond) * dx)


# ---------------------------------------------------------------------------
# the companion potential and the density-bound monitor

@dataclass(frozen=True)
class PhiField:
    phi: np.ndarray
    time: float


def initial_phi(init, grid):
    """phi(x, 0) = integral of rho0*u0 from 0 to x (midpoint cumulative)."""
    integrand = init.rho0 * init.u0
    phi = grid.dx * (np.cumsum(integrand) - 0.5 * integrand)
    phi.setflags(write=False)
    return PhiField(phi, 0.0)


def update_phi(phi, state_before, state_after, dt, grid, params):
    """Advance phi by dt times the effective pressure of state_before."""
    s = state_before
    ptilde = (params.lambda_visc * cell_grad(s.u, grid.dx, ODD)
              - s.rho * s.u * s.u
              - pressure(s.rho, s.theta, params)
              - 0.5 * np.sum(s.b * s.b, axis=1))
    new = phi.phi + dt * ptilde
    new.setflags(write=False)
    return PhiField(new, state_after.time)


def phi_momentum_residual(phi, state, grid):
    """L2 defect of the defining relation phi_x = rho*u."""
    r = cell_grad(phi.phi, grid.dx, EVEN) - state.rho * state.u
    return float(np.sqrt(np.sum(r * r) * grid.dx))


def density_bound_monitor(phi, state):
    """max_i rho_i * exp(phi_i); +inf sentinel on overflow."""
    with np.errstate(over="ignore"):
        vals = state.rho * np.exp(phi.phi)
    return float(vals.max(initial=0.0))


# ---------------------------------------------------------------------------
# norm suite

def norm_suite(state_before, state_after, dt, grid, params):
    """Discrete norms of the quantities the a-priori theory controls.

    First derivatives of u, w, b, theta use the solver's reflecting-ghost
    central stencils; rho_x uses one-sided differences at the walls (density
    carries no boundary condition).  Second derivatives use the 3-point
    stencil with one-sided copies at the walls.  Time-difference norms use
    the given state pair and are zero when dt == 0 (initial record).
    """
    dx = grid.dx
    sa, sb = state_after, state_before
    sqrt_rho = np.sqrt(sa.rho)

    def l2(values):
        if values.ndim == 2:
            values = np.sqrt(np.sum(values * values, axis=1))
        return float(np.sqrt(np.sum(values * values) * dx))

    def d_dt(fa, fb):
        if dt == 0.0:
            return np.zeros_like(fa)
        return (fa - fb) / dt

    def second(f):
        if f.ndim == 2:
            return np.column_stack([second_diff_onesided(f[:, 0], dx),
                                    second_diff_onesided(f[:, 1], dx)])
        return second_diff_onesided(f, dx)

    theta_x = cell_grad(sa.theta, dx, EVEN)
    norms = {
        "b_t": l2(d_dt(sa.b, sb.b)),
        "b_x": l2(cell_grad(sa.b, dx, ODD)),
        "b_xx": l2(second(sa.b)),
        "kappa_theta_x": l2(kappa(sa.theta, params) * theta_x),
        "p_l2": l2(pressure(sa.rho, sa.theta, params)),
        "rho_t": l2(d_dt(sa.rho, sb.rho)),
        "rho_theta_q2": float(np.sum(sa.rho * sa.theta ** (params.q_exp + 2.0)) * dx),
        "rho_x": l2(np.gradient(sa.rho, dx)),
        "sqrt_rho_theta_t": l2(sqrt_rho * d_dt(sa.theta, sb.theta)),
        "sqrt_rho_u_t": l2(sqrt_rho * d_dt(sa.u, sb.u)),
        "sqrt_rho_w_t": l2(sqrt_rho[:, None] * d_dt(sa.w, sb.w)),
        "theta_xx": l2(second(sa.theta)),
        "u_x": l2(cell_grad(sa.u, dx, ODD)),
        "u_xx": l2(second(sa.u)),
        "w_x": l2(cell_grad(sa.w, dx, ODD)),
        "w_xx": l2(second(sa.w)),
    }
    return norms


# ---------------------------------------------------------------------------
# records and their CSV schema

SCALAR_COLUMNS = (
    "time", "mass", "energy", "entropy_fn", "entropy_prod_cum",
    "diss_visc", "diss_shear", "diss_mag", "diss_heat", "weighted_diss",
    "max_rho", "min_theta", "max_theta", "rho_F_max",
)

# alphabetical; norm_suite entries plus the two accumulator-owned series
NORM_NAMES = (
    "b_t", "b_x", "b_xx", "kappa_theta_x", "p_l2", "phi_residual",
    "rho_t", "rho_theta_q2", "rho_x", "sqrt_rho_theta_t", "sqrt_rho_u_t",
    "sqrt_rho_w_t", "theta_sup_cum", "theta_xx", "u_x", "u_xx", "w_x", "w_xx",
)

CSV_COLUMNS = SCALAR_COLUMNS + NORM_NAMES


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass: float
    energy: float
    entropy_fn: float
    entropy_prod_cum: float
    diss_visc: float
    diss_shear: float
    diss_mag: float
    diss_heat: float
    weighted_diss: float
    max_rho: float
    min_theta: float
    max_theta: float
    rho_F_max: float
    norms: dict


def csv_header():
    return ",".join(CSV_COLUMNS)


def csv_row(record):
    values = [getattr(record, name) for name in SCALAR_COLUMNS]
    values += [record.norms[name] for name in NORM_NAMES]
    return ",".join(f"{v:.17g}" for v in values)


class DiagnosticsAccumulator:
    """Stateful companion of a run: cumulative integrals plus the phi field.

    update() must be called once per accepted step, record() whenever a
    DiagnosticsRecord for the current state is wanted.
    """

    def __init__(self, init, grid, params, alpha=None):
        self.grid = grid
        self.params = params
        self.alpha = default_alpha(params) if alpha is None else check_alpha(alpha, params)
        self.phi = initial_phi(init, grid)
        self.entropy_prod = 0.0
        self.diss = [0.0, 0.0, 0.0, 0.0]
        self.weighted = 0.0
        self.theta_sup = 0.0
        self._pair = None

    def update(self, state_before, state_after, dt):
        inc = dissipation_increment(state_before, state_after, dt, self.grid, self.params)
        for i in range(4):
            self.diss[i] += inc[i]
        self.weighted += weighted_dissipation_increment(
            state_before, state_after, dt, self.grid, self.params, self.alpha)
        self.entropy_prod += entropy_production_increment(
            state_before, state_after, dt, self.grid, self.params)
        power = self.params.q_exp - self.alpha + 1.0
        self.theta_sup += dt * float(state_after.theta.max(initial=0.0)) ** power
        self.phi = update_phi(self.phi, state_before, state_after, dt, self.grid, self.params)
        self._pair = (state_before, dt)

    def record(self, state):
        before, dt = self._pair if self._pair is not None else (state, 0.0)
        norms = norm_suite(before, state, dt, self.grid, self.params)
        norms["phi_residual"] = phi_momentum_residual(self.phi, state, self.grid)
        norms["theta_sup_cum"] = self.theta_sup
        return DiagnosticsRecord(
            time=state.time,
            mass=total_mass(state, self.grid),
            energy=total_energy(state, self.grid, self.params),
            entropy_fn=entropy_functional(state, self.grid),
            entropy_prod_cum=self.entropy_prod,
            diss_visc=self.diss[0],
            diss_shear=self.diss[1],
            diss_mag=self.diss[2],
            diss_heat=self.diss[3],
            weighted_diss=self.weighted,
            max_rho=float(state.rho.max()),
            min_theta=float(state.theta.min()),
            max_theta=float(state.theta.max()),
            rho_F_max=density_bound_monitor(self.phi, state),
            norms=norms,
        )
