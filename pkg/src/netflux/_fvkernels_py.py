"""NumPy fallback for the finite-volume update kernels.

Mirrors the arithmetic of the compiled extension operation for operation so
both backends produce bit-identical cell values.
"""

import numpy as np

BACKEND = "python"


def upwind_update_const(rho, nu, dt_over_h, flux_lo, flux_hi):
    """Explicit upwind step with one constant speed, in place."""
    k = rho.shape[0]
    flux = np.empty(k + 1)
    flux[0] = flux_lo
    flux[k] = flux_hi
    if nu >= 0.0:
        flux[1:k] = nu * rho[: k - 1]
    else:
        flux[1:k] = nu * rho[1:]
    rho -= dt_over_h * (flux[1:] - flux[:-1])


def upwind_update_var(rho, nu_iface, dt_over_h, flux_lo, flux_hi):
    """Explicit upwind step with per-interface speeds, in place."""
    k = rho.shape[0]
    flux = np.empty(k + 1)
    flux[0] = flux_lo
    flux[k] = flux_hi
    flux[1:k] = np.where(nu_iface >= 0.0, nu_iface * rho[: k - 1], nu_iface * rho[1:])
    rho -= dt_over_h * (flux[1:] - flux[:-1])


def godunov_update(rho, v_max, rho_max, dt_over_h, flux_lo, flux_hi):
    """Explicit Godunov step for the concave flux rho*v_max*(1 - rho/rho_max)."""
    k = rho.shape[0]
    sigma = 0.5 * rho_max
    flux = np.empty(k + 1)
    flux[0] = flux_lo
    flux[k] = flux_hi
    ua = np.minimum(rho[: k - 1], sigma)
    demand = v_max * ua * (1.0 - ua / rho_max)
    ub = np.maximum(rho[1:], sigma)
    supply = v_max * ub * (1.0 - ub / rho_max)
    flux[1:k] = np.minimum(demand, supply)
    rho -= dt_over_h * (flux[1:] - flux[:-1])
