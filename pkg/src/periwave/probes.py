"""Numerical probes of the structural conditions behind the existence theory."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from periwave.errors import ConvergenceError, DomainError
from periwave.model import MicroPotential, dispersion, n_ell
from periwave.solver import TANH_C1, SolverConfig, continue_in_ell

TANH_C2 = -4.0 / 45.0
TANH_C3 = 16.0 / 15.0


def solve_energy(cfg: SolverConfig, pot, grid, K: float, n_xi: int = 32):
    """Final-cutoff solution at energy K, or the ConvergenceError raised."""
    try:
        return continue_in_ell(replace(cfg, K=K), pot, grid, n_xi=n_xi)[-1]
    except ConvergenceError as err:
        return err


def energy_inequality(cfg: SolverConfig, pot, grid, K_values, n_xi: int = 32):
    """Rows ``K,T,n_ell_Vpp_T,satisfied,converged`` with satisfied iff N_ell V''(0) T < K.

    Also returns the dict K -> solution (or error) for reuse.
    """
    rows, sols = [], {}
    ell = cfg.ell_schedule[-1]
    scale = n_ell(pot, ell) * pot.v_pp0
    for K in K_values:
        res = solve_energy(cfg, pot, grid, K, n_xi)
        sols[K] = res
        if isinstance(res, ConvergenceError):
            rows.append({"K": K, "T": math.nan, "n_ell_Vpp_T": math.nan, "satisfied": False, "converged": False})
            continue
        lhs = scale * res.T
        rows.append({"K": K, "T": res.T, "n_ell_Vpp_T": lhs, "satisfied": bool(lhs < K), "converged": True})
    return rows, sols


def subadditivity(cfg: SolverConfig, pot, grid, K_values, fractions=(0.25, 0.5, 0.75), n_xi: int = 32, known=None):
    """Check T_K < T_a + T_{K-a} for a = fraction * K.

    Rows ``K,alpha,T_K,T_alpha,T_rest,margin,holds,converged``; ``known``
    maps energies to already computed solutions.
    """
    cache = dict(known or {})

    def T_at(K):
        if K not in cache:
            cache[K] = solve_energy(cfg, pot, grid, K, n_xi)
        r = cache[K]
        return math.nan if isinstance(r, ConvergenceError) else r.T

    rows = []
    for K in K_values:
        TK = T_at(K)
        for fr in fractions:
            a = fr * K
            Ta, Tb = T_at(a), T_at(K - a)
            ok = all(math.isfinite(v) for v in (TK, Ta, Tb))
            margin = Ta + Tb - TK if ok else math.nan
            rows.append(
                {
                    "K": K,
                    "alpha": a,
                    "T_K": TK,
                    "T_alpha": Ta,
                    "T_rest": Tb,
                    "margin": margin,
                    "holds": bool(ok and margin > 0),
                    "converged": ok,
                }
            )
    return rows


def tails(sol, fit_range=(5.0, 20.0)):
    """log10 |q'| against z, and least-squares log-slopes on each side.

    Returns (rows, summary). The slopes are reported, not interpreted: the
    decay law of the true wave is not asserted.
    """
    p = sol.profile
    z = p.grid.z[:-1] + 0.5 * p.grid.h
    s = p.slopes
    peak = float(np.max(s))
    with np.errstate(divide="ignore"):
        logs = np.log10(np.abs(s))
    rows = [{"z": float(a), "log10_dq": float(b)} for a, b in zip(z, logs)]
    lo, hi = fit_range
    out = {"peak_slope": peak}
    for side, mask in (("left", (z <= -lo) & (z >= -hi)), ("right", (z >= lo) & (z <= hi))):
        good = mask & (s > 0)
        if good.sum() >= 2:
            out[f"{side}_log_slope"] = float(np.polyfit(z[good], np.log(s[good]), 1)[0])
        else:
            out[f"{side}_log_slope"] = math.nan
    inner = np.abs(z) <= hi
    out["min_interior_slope"] = float(np.min(s[inner]))
    out["strictly_positive"] = bool(np.all(s[inner] > 0))
    edge = max(abs(s[inner][0]), abs(s[inner][-1]))
    out["orders_of_decay"] = float(math.log10(peak / edge)) if edge > 0 else math.inf
    return rows, out


def tanh_energy(pot: MicroPotential, Lambda: float, beta: float, ell: float = 0.0, n_xi: int = 64, hz: float = 0.01):
    """E^ell of the exact profile (Lambda / sqrt(beta)) tanh(beta z).

    Gauss-Legendre in xi and the trapezoid rule in z, which converges
    spectrally here because the integrand is smooth and decays
    exponentially. The profile is evaluated in closed form, so no
    interpolation error enters.
    """
    if not beta > 0:
        raise DomainError(f"steepness must be positive, got {beta}")
    t, w = np.polynomial.legendre.leggauss(n_xi)
    xi = 0.5 * (pot.delta - ell) * (t + 1) + ell
    w = 0.5 * (pot.delta - ell) * w
    half = 40.0 / beta
    z = np.arange(-half, half + 0.5 * hz, hz)
    amp = Lambda / math.sqrt(beta)
    total = 0.0
    for x, wx in zip(xi, w):
        d = amp * (np.tanh(beta * (z + x)) - np.tanh(beta * z))
        total += wx * pot.k(x) * hz * math.fsum(pot.v(d / pot.m(x), 0))
    return total


def tanh_expansion(Lambda: float, beta: float, delta: float, ell: float = 0.0) -> float:
    """Three-term small-beta expansion of the tanh-family energy."""
    d2 = delta**2 - ell**2
    d4 = delta**4 - ell**4
    return (
        TANH_C1 * Lambda**2 / 4 * d2
        + TANH_C2 * Lambda**2 * beta**2 / 8 * d4
        + TANH_C3 * Lambda**3 * math.sqrt(beta) / 12 * d2
    )


def tanh_asymptotics(pot: MicroPotential, K: float = 1.0, ell: float = 0.0, betas=(0.2, 0.1, 0.05, 0.025)):
    """Error of the expansion at Lambda = sqrt(4K / (C1 (delta^2 - ell^2))) and its observed order.

    Rows ``beta,E_quadrature,E_expansion,error,order``; order is
    log2(err(2 beta) / err(beta)) and NaN on the first row.
    """
    if not pot.is_even:
        raise DomainError("the expansion is for the symmetrized potential")
    Lambda = math.sqrt(4 * K / (TANH_C1 * (pot.delta**2 - ell**2)))
    rows, prev = [], None
    for b in betas:
        Eq = tanh_energy(pot, Lambda, b, ell)
        Ex = tanh_expansion(Lambda, b, pot.delta, ell)
        err = Eq - Ex
        order = math.nan if prev is None else math.log(abs(prev[1] / err)) / math.log(prev[0] / b)
        rows.append({"beta": b, "E_quadrature": Eq, "E_expansion": Ex, "error": err, "order": order})
        prev = (b, err)
    return rows


def dispersion_table(pot: MicroPotential, kappas):
    rows = []
    for k in kappas:
        w, ph, gr = dispersion(pot, k)
        rows.append({"kappa": float(k), "omega": w, "phase": ph, "group": gr})
    return rows
