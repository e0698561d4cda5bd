"""Semi-implicit operator-split time stepper.

One step advances the system through five stages on the shared collocated
grid, in this order:

  1. conservative upwind continuity update (exact mass conservation),
  2. longitudinal momentum: upwind convection, central gradient of the
     total pressure P + |b|^2/2, backward-Euler longitudinal viscosity,
  3. transverse momentum: upwind convection of rho*w with the magnetic flux
     -b folded into the same conservative flux, backward-Euler shear
     viscosity,
  4. induction: central discretization of (u b - w)_x with the freshest
     velocities, backward-Euler magnetic diffusion,
  5. internal energy: upwind convection of rho*e, explicit heating
     lambda*u_x^2 + mu*|w_x|^2 + nu*|b_x|^2 - P*u_x at the freshest fields,
     and implicit nonlinear heat conduction solved by Picard iteration with
     frozen conductivity.

All implicit solves are written in increment form so that spatially constant
states produce exactly zero corrections: equilibria are bitwise fixed points.
Cells with density at or below the vacuum threshold carry zero velocity and
an unchanged temperature, and the faces between gas and vacuum transmit
nothing: no viscous stress, no heat.  Massless cells cannot push on the gas
or store dissipation, so insulating those faces (and pinning the vacuum rows
of every density-weighted solve) is the discrete version of that statement.
Magnetic diffusion is the one exception; b stays meaningful in vacuum.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .model import State, VACUUM_RHO, kappa, pressure
from .operators import (
    EVEN,
    ODD,
    cell_grad,
    div_faces,
    face_average,
    face_couplings,
    face_diff,
    flux_laplacian,
    solve_flux_system,
    upwind_face_flux,
)


class SimulationError(Exception):
    """Base class for failures while advancing the system."""


class PositivityError(SimulationError):
    """Density or temperature left its admissible range."""


class PicardError(SimulationError):
    """The nonlinear conduction iteration failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalError(SimulationError):
    """A linear solve or array operation produced garbage."""


class CompatibilityError(SimulationError):
    """Initial data failed the admissibility check."""


@dataclass(frozen=True)
class SchemeConfig:
    """Tunables of the time stepper."""

    cfl: float = 0.5
    dt_max: float = 0.05
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    theta_floor_tol: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.dt_max > 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max!r}")
        if not self.picard_tol > 0.0:
            raise ValueError(f"picard_tol must be positive, got {self.picard_tol!r}")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be at least 1")
        if self.theta_floor_tol < 0.0:
            raise ValueError("theta_floor_tol must be nonnegative")


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    picard_iters: int
    max_div_residual: float
    clipped_cells: int


@dataclass(frozen=True)
class Forcing:
    """External source terms f(x, t) added to the five equations.

    Each entry is a callable of (cell centers, time) returning per-cell
    values ((n,) for scalar equations, (n, 2) for w and b); None means no
    forcing for that equation.  Used by the manufactured-solution harness.
    """

    rho: Callable | None = None
    u: Callable | None = None
    w: Callable | None = None
    b: Callable | None = None
    e: Callable | None = None


def stable_dt(state, grid, params, cfg):
    """Advective step-size bound min(dt_max, cfl*dx / max_i(|u_i| + c_i)).

    The sound speed is c = sqrt(gas_R * theta).  The max is floored at unit
    reference speed, so a fully at-rest cold field gets the plain advective
    step cfl*dx instead of a division by zero.
    """
    speed = np.abs(state.u) + np.sqrt(params.gas_R * state.theta)
    fastest = max(float(speed.max()), 1.0)
    return min(cfg.dt_max, cfg.cfl * grid.dx / fastest)


def advect_density(rho, u, dt, grid):
    """Stage 1: conservative first-order upwind continuity update."""
    uf = face_average(u, ODD)
    return rho - dt * div_faces(upwind_face_flux(uf, rho), grid.dx)


def _require_nonnegative(arr, floor_tol, what, clip_to_zero=True):
    """Clip roundoff-level undershoots to zero; fail on genuine ones."""
    low = float(arr.min(initial=0.0))
    if low < -floor_tol:
        raise PositivityError(f"{what} reached {low:.6g}, beyond the allowed undershoot"
                              f" {floor_tol:.3g}; the step size is too large for this data")
    if clip_to_zero and low < 0.0:
        arr = np.maximum(arr, 0.0)
    return arr


def conduction_update(theta_tilde, rho, dt, grid, params, cfg):
    """Stage-5 implicit conduction solve (exposed for direct testing).

    Picard iteration on (c_v rho/dt)(theta - theta_tilde) = (kappa(theta)
    theta_x)_x with conductivity frozen at the previous iterate.  Wall faces
    carry zero flux (insulated); faces touching vacuum cells are likewise
    insulated and vacuum cells are pinned at their incoming value, which is
    how "temperature is carried through vacuum" is realized.  Each linear
    pass is a symmetric M-matrix solve, so the update obeys the discrete
    maximum principle with respect to theta_tilde.

    Returns (theta_new, picard_iterations).
    """
    n = theta_tilde.shape[0]
    dx = grid.dx
    vac = rho <= VACUUM_RHO
    face_insulated = np.zeros(n + 1, dtype=bool)
    face_insulated[0] = face_insulated[-1] = True
    face_insulated[1:-1] = vac[:-1] | vac[1:]

    cap = np.where(vac, 1.0, params.c_v * rho / dt)
    theta_k = theta_tilde
    for iteration in range(1, cfg.picard_max_iters + 1):
        kf = face_average(kappa(np.maximum(theta_k, 0.0), params), EVEN)
        off = kf / (dx * dx)
        off[face_insulated] = 0.0
        try:
            delta = solve_flux_system(cap, off, flux_laplacian(off, theta_tilde))
        except np.linalg.LinAlgError as err:  # pragma: no cover - defensive
            raise NumericalError(f"conduction solve failed: {err}") from err
        theta_next = theta_tilde + delta
        change = float(np.max(np.abs(theta_next - theta_k)))
        scale = float(np.max(np.abs(theta_k))) + 1e-30
        theta_k = theta_next
        if change <= cfg.picard_tol * scale:
            return theta_k, iteration
    raise PicardError(
        f"conduction iteration did not converge within {cfg.picard_max_iters} passes"
        f" (last relative change {change / scale:.3g})",
        residual=change / scale,
    )


def step(state, dt, grid, params, cfg, forcing=None):
    """Advance one operator-split step of size dt.

    Returns (new_state, StepReport).  dt is trusted to satisfy the stable_dt
    bound; violating it surfaces as a positivity failure, not silent damage.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    dx = grid.dx
    x = grid.cell_centers
    t_new = state.time + dt
    rho0, u0, w0, b0, th0 = state.rho, state.u, state.w, state.b, state.theta
    scale_tol = 64.0 * np.finfo(float).eps * max(1.0, float(rho0.max(initial=0.0)))

    uf = face_average(u0, ODD)

    # stage 1: continuity
    rho1 = advect_density(rho0, u0, dt, grid)
    if forcing is not None and forcing.rho is not None:
        rho1 = rho1 + dt * forcing.rho(x, t_new)
    rho1 = _require_nonnegative(rho1, scale_tol, "density")
    vac = rho1 <= VACUUM_RHO
    rho_safe = np.maximum(rho1, VACUUM_RHO)
    # faces touching a vacuum cell are stress-free and insulated
    vac_face = np.zeros(grid.n_cells + 1, dtype=bool)
    vac_face[:-1] |= vac
    vac_face[1:] |= vac
    cap_gas = np.where(vac, 1.0, rho1 / dt)

    # stage 2: longitudinal momentum
    ptot = pressure(rho0, th0, params) + 0.5 * np.sum(b0 * b0, axis=1)
    m_star = (rho0 * u0
              - dt * div_faces(upwind_face_flux(uf, rho0 * u0), dx)
              - dt * cell_grad(ptot, dx, EVEN))
    if forcing is not None and forcing.u is not None:
        m_star = m_star + dt * forcing.u(x, t_new)
    u_tilde = np.where(vac, 0.0, m_star / rho_safe)
    off_u = face_couplings(grid.n_cells, params.lambda_visc, dx, ODD)
    off_u[vac_face] = 0.0
    u1 = u_tilde + solve_flux_system(cap_gas, off_u, flux_laplacian(off_u, u_tilde))

    # stage 3: transverse momentum (the -b part rides in the same flux)
    flux_w = upwind_face_flux(uf, rho0[:, None] * w0) - face_average(b0, ODD)
    mw_star = rho0[:, None] * w0 - dt * div_faces(flux_w, dx)
    if forcing is not None and forcing.w is not None:
        mw_star = mw_star + dt * forcing.w(x, t_new)
    w_tilde = np.where(vac[:, None], 0.0, mw_star / rho_safe[:, None])
    off_w = face_couplings(grid.n_cells, params.mu_visc, dx, ODD)
    off_w[vac_face] = 0.0
    w1 = w_tilde + solve_flux_system(cap_gas, off_w, flux_laplacian(off_w, w_tilde))

    # stage 4: induction, with the freshest velocities (valid in vacuum too)
    uf1 = face_average(u1, ODD)
    flux_b = uf1[:, None] * face_average(b0, ODD) - face_average(w1, ODD)
    b_star = b0 - dt * div_faces(flux_b, dx)
    if forcing is not None and forcing.b is not None:
        b_star = b_star + dt * forcing.b(x, t_new)
    off_b = face_couplings(grid.n_cells, params.nu_mag, dx, ODD)
    cap_b = np.full(grid.n_cells, 1.0 / dt)
    b1 = b_star + solve_flux_system(cap_b, off_b, flux_laplacian(off_b, b_star))

    # stage 5: internal energy
    energy0 = params.c_v * rho0 * th0
    du_f = face_diff(u1, dx, ODD)
    dw_f = face_diff(w1, dx, ODD)
    du_f[vac_face] = 0.0
    dw_f[vac_face] = 0.0
    db_f = face_diff(b1, dx, ODD)
    heat_f = (params.lambda_visc * du_f * du_f
              + params.mu_visc * np.sum(dw_f * dw_f, axis=1)
              + params.nu_mag * np.sum(db_f * db_f, axis=1))
    heating = 0.5 * (heat_f[:-1] + heat_f[1:])
    work = pressure(rho1, th0, params) * cell_grad(u1, dx, ODD)
    source = heating - work
    if forcing is not None and forcing.e is not None:
        source = source + forcing.e(x, t_new)
    energy_star = (energy0
                   - dt * div_faces(upwind_face_flux(uf, energy0), dx)
                   + dt * source)
    theta_tilde = np.where(vac, th0, energy_star / (params.c_v * rho_safe))
    clipped = int(np.count_nonzero(theta_tilde < 0.0))
    theta_tilde = _require_nonnegative(theta_tilde, cfg.theta_floor_tol, "temperature")
    theta1, iters = conduction_update(theta_tilde, rho1, dt, grid, params, cfg)
    theta1 = _require_nonnegative(theta1, scale_tol, "temperature (post conduction)")

    new_state = State(t_new, rho1, u1, w1, b1, theta1)
    residuals = consistency_residuals(state, new_state, dt, grid, params)
    report = StepReport(dt_used=dt, picard_iters=iters,
                        max_div_residual=max(residuals), clipped_cells=clipped)
    return new_state, report


def consistency_residuals(state_before, state_after, dt, grid, params):
    """Discrete residuals of the two balances the state should inherit.

    The evolved fields satisfy, up to discretization error, a magnetic
    energy balance

        (|b|^2/2)_t + b.(u b - w)_x = nu (b.b_x)_x - nu |b_x|^2

    and an effective pressure balance

        P_t + (u P)_x - (gas_R/c_v)(kappa theta_x)_x
            = (gas_R/c_v)(lambda u_x^2 + mu |w_x|^2 + nu |b_x|^2 - P u_x).

    Returns the discrete L2 norms (r_mag, r_pressure), with time derivatives
    from the state pair and spatial terms at state_after.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    dx = grid.dx
    sa, sb = state_after, state_before
    lam, mu, nu = params.lambda_visc, params.mu_visc, params.nu_mag
    r_over_cv = params.gas_R / params.c_v

    u, w, b, th = sa.u, sa.w, sa.b, sa.theta
    bx = cell_grad(b, dx, ODD)
    bx_sq = np.sum(bx * bx, axis=1)

    de_mag = 0.5 * (np.sum(sa.b * sa.b, axis=1) - np.sum(sb.b * sb.b, axis=1)) / dt
    advect = np.sum(b * cell_grad(u[:, None] * b - w, dx, ODD), axis=1)
    bbx_face = np.sum(face_average(b, ODD) * face_diff(b, dx, ODD), axis=1)
    r_mag = de_mag + advect - nu * div_faces(bbx_face, dx) + nu * bx_sq

    p_after = pressure(sa.rho, sa.theta, params)
    p_before = pressure(sb.rho, sb.theta, params)
    cond_face = face_average(kappa(th, params), EVEN) * face_diff(th, dx, EVEN)
    flux = face_average(u, ODD) * face_average(p_after, EVEN) - r_over_cv * cond_face
    ux = cell_grad(u, dx, ODD)
    wx = cell_grad(w, dx, ODD)
    src = r_over_cv * (lam * ux * ux + mu * np.sum(wx * wx, axis=1)
                       + nu * bx_sq - p_after * ux)
    r_pre = (p_after - p_before) / dt + div_faces(flux, dx) - src

    def l2(r):
        return float(np.sqrt(np.sum(r * r) * dx))

    return l2(r_mag), l2(r_pre)


def run(init, t_end, grid, params, cfg=None, sink=None, *, record_every=1,
        alpha=None, forcing=None, snapshot_times=(), snapshot_sink=None,
        check_compat=True, on_step=None):
    """March the system from the initial data to t_end.

    The step size follows stable_dt, truncated to land exactly on t_end and
    on every requested snapshot time.  When a sink is given, a full
    diagnostics record is produced for the initial state, every
    record_every-th step, and the final state.  Step failures are re-raised
    annotated with the step index and time.  check_compat=False waives the
    admissibility precondition (regularized continuation runs and forced
    manufactured-solution runs do this deliberately).
    """
    from .diagnostics import DiagnosticsAccumulator
    from .initial import compatibility_residuals

    if t_end < 0.0:
        raise ValueError(f"t_end must be nonnegative, got {t_end!r}")
    if cfg is None:
        cfg = SchemeConfig()
    if check_compat:
        report = compatibility_residuals(init, grid, params)
        if not report.passed:
            raise CompatibilityError(
                "initial data failed the admissibility check "
                f"(worst vacuum violation {report.worst_vacuum_violation:.3g} "
                f"> tolerance {report.tolerance:.3g})")

    state = init.to_state()
    acc = DiagnosticsAccumulator(init, grid, params, alpha=alpha) if sink is not None else None
    if sink is not None:
        sink(acc.record(state))

    snaps = sorted({float(t) for t in snapshot_times if 0.0 <= t <= t_end})
    if snapshot_sink is not None and snaps and snaps[0] == 0.0:
        snapshot_sink(state)
        snaps.pop(0)
    if snapshot_sink is None:
        snaps = []

    eps_end = 1e-14 * max(1.0, t_end)
    step_idx = 0
    while state.time < t_end - eps_end:
        dt = min(stable_dt(state, grid, params, cfg), t_end - state.time)
        if snaps:
            dt = min(dt, snaps[0] - state.time)
        try:
            new_state, report = step(state, dt, grid, params, cfg, forcing)
        except SimulationError as err:
            err.args = (f"step {step_idx} at t = {state.time:.8g}: {err}",)
            raise
        step_idx += 1
        if acc is not None:
            acc.update(state, new_state, dt)
        state = new_state
        if on_step is not None:
            on_step(report)
        if snaps and state.time >= snaps[0] - 1e-12 * max(1.0, snaps[0]):
            snapshot_sink(state)
            snaps.pop(0)
        if sink is not None and (step_idx % record_every == 0
                                 or state.time >= t_end - eps_end):
            sink(acc.record(state))
    return state
