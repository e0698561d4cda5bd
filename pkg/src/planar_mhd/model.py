"""Core value types and algebraic closures.

State vector on (0, 1): density rho >= 0, longitudinal velocity u,
transverse velocity w in R^2, transverse magnetic field b in R^2, and
absolute temperature theta >= 0.  Closures: ideal-gas pressure
P = gas_R * rho * theta, internal energy e = c_v * theta, and a
temperature-dependent heat conductivity kappa(theta) = kappa_a +
kappa_b * theta**q_exp with growth exponent q_exp > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this density a cell is treated as vacuum: primitive velocities are
# zeroed there and the temperature is carried unchanged.
VACUUM_RHO = 1e-12

_PARAM_NAMES = (
    "lambda_visc",
    "mu_visc",
    "nu_mag",
    "gas_R",
    "c_v",
    "kappa_a",
    "kappa_b",
    "q_exp",
)


@dataclass(frozen=True)
class PhysParams:
    """Physical constants.  Defaults normalize everything to one except the
    conductivity growth exponent."""

    lambda_visc: float = 1.0  # longitudinal viscosity
    mu_visc: float = 1.0      # shear viscosity
    nu_mag: float = 1.0       # magnetic diffusivity
    gas_R: float = 1.0        # specific gas constant
    c_v: float = 1.0          # heat capacity at constant volume
    kappa_a: float = 1.0      # constant part of kappa(theta)
    kappa_b: float = 1.0      # coefficient of theta**q_exp in kappa(theta)
    q_exp: float = 2.0        # conductivity growth exponent, must be > 0

    def __post_init__(self):
        for name in _PARAM_NAMES:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be a finite positive real, got {value!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on (0, 1)."""

    n_cells: int
    dx: float
    cell_centers: np.ndarray

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        if abs(self.dx * self.n_cells - 1.0) > 1e-12:
            raise ValueError("grid must tile the unit interval: dx * n_cells != 1")
        if self.cell_centers.shape != (self.n_cells,):
            raise ValueError("cell_centers has the wrong shape")

    @classmethod
    def uniform(cls, n_cells):
        if n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {n_cells}")
        dx = 1.0 / n_cells
        x = (np.arange(n_cells) + 0.5) * dx
        x.setflags(write=False)
        return cls(n_cells, dx, x)


def _frozen_array(values, shape, name, nonnegative=False):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if nonnegative and np.any(arr < 0.0):
        raise ValueError(f"{name} must be nonnegative everywhere")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class State:
    """Immutable field snapshot at one instant.

    Arrays are copied on construction and marked read-only, so states can be
    shared freely between the stepper, diagnostics, and sinks.
    """

    time: float
    rho: np.ndarray
    u: np.ndarray
    w: np.ndarray
    b: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.rho).shape[0]
        object.__setattr__(self, "rho", _frozen_array(self.rho, (n,), "rho", nonnegative=True))
        object.__setattr__(self, "u", _frozen_array(self.u, (n,), "u"))
        object.__setattr__(self, "w", _frozen_array(self.w, (n, 2), "w"))
        object.__setattr__(self, "b", _frozen_array(self.b, (n, 2), "b"))
        object.__setattr__(self, "theta", _frozen_array(self.theta, (n,), "theta", nonnegative=True))

    @property
    def n_cells(self):
        return self.rho.shape[0]


def pressure(rho, theta, params):
    """Ideal-gas pressure P = gas_R * rho * theta."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("pressure: rho must be nonnegative")
    if np.any(theta < 0.0):
        raise ValueError("pressure: theta must be nonnegative")
    out = params.gas_R * rho * theta
    return float(out) if out.ndim == 0 else out


def kappa(theta, params):
    """Heat conductivity kappa_a + kappa_b * theta**q_exp."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.0):
        raise ValueError("kappa: theta must be nonnegative")
    out = params.kappa_a + params.kappa_b * theta ** params.q_exp
    return float(out) if out.ndim == 0 else out


def internal_energy(theta, params):
    """Specific internal energy e = c_v * theta."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.0):
        raise ValueError("internal_energy: theta must be nonnegative")
    out = params.c_v * theta
    return float(out) if out.ndim == 0 else out
