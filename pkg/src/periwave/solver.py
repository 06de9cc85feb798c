"""Travelling waves as constrained minimizers of kinetic energy.

The minimizer works on cell slopes s = q'. In those variables the natural
inner product of the problem (integral of q' p') is the plain L2 product, so
the steepest-descent direction for T restricted to the tangent space of
{E = K} is d = s - mu * grad E with mu the projection coefficient. After a
step the iterate is pulled back onto the constraint by the scalar rescaling
s -> lam * s, which is exact because lam -> E(lam s) is increasing.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from periwave.errors import ConvergenceError, DegenerateInputError, DomainError
from periwave.functionals import (
    QuadratureSpec,
    grad_potential,
    kinetic,
    solve_scale,
    stencil,
)
from periwave.model import MicroPotential, bond_force_f, n_ell, sound_speed_c0
from periwave.profile import (
    Grid,
    Profile,
    eval_at,
    half_rise_point,
    piecewise_linear,
    shift_cells,
    tanh_profile,
)

log = logging.getLogger(__name__)

# coefficient of Lambda^2 (delta^2 - ell^2) / 4 in the small-beta energy of the tanh family
TANH_C1 = 4.0 / 3.0


@dataclass(frozen=True)
class InitSpec:
    """Initial guess: ``piecewise_linear`` (Lambda, L), ``tanh`` (Lambda, beta) or ``warm_start``."""

    kind: str = "auto"
    Lambda: float = 1.0
    L: float = 2.0
    beta: float = 0.5

    def __post_init__(self):
        if self.kind not in ("auto", "piecewise_linear", "tanh", "warm_start"):
            raise ValueError(f"unknown init kind {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    K: float
    ell_schedule: tuple = (0.0,)
    max_iters: int = 5000
    step_init: float = 1.0
    step_max: float = 1.0
    armijo_c: float = 1e-4
    tol_residual: float = 1e-6
    tol_constraint: float = 1e-10
    monotonize_every: int = 10
    init: InitSpec = field(default_factory=InitSpec)
    flat_window: int = 10
    flat_rtol: float = 1e-12
    # K below this starts from the tanh family, above it from a linear ramp
    init_threshold_K: float = 1.0

    def __post_init__(self):
        if not self.K > 0:
            raise DomainError(f"solver.K must be positive, got {self.K}")
        sched = tuple(float(x) for x in self.ell_schedule)
        if not sched:
            raise DomainError("solver.ell_schedule must not be empty")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise DomainError("solver.ell_schedule must be strictly decreasing")
        if any(x < 0 for x in sched):
            raise DomainError("solver.ell_schedule entries must be non-negative")
        object.__setattr__(self, "ell_schedule", sched)
        for name in ("tol_residual", "tol_constraint", "armijo_c"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DomainError(f"solver.{name} must lie in (0, 1), got {v}")
        if self.max_iters < 1 or self.monotonize_every < 1:
            raise DomainError("solver.max_iters and solver.monotonize_every must be positive")
        if not 0 < self.step_init <= self.step_max:
            raise DomainError("need 0 < step_init <= step_max")


@dataclass
class WaveSolution:
    profile: Profile
    K: float
    ell: float
    T: float
    E: float
    lambda_: float
    c: Optional[float]
    c0: float
    n_ell: float
    residual_rel: float
    monotone: bool
    iterations: int
    converged: bool = True

    def scalars(self) -> dict:
        return {
            "K": self.K,
            "ell": self.ell,
            "T": self.T,
            "E": self.E,
            "lambda": self.lambda_,
            "c": self.c,
            "c0": self.c0,
            "n_ell": self.n_ell,
            "residual_rel": self.residual_rel,
            "monotone": self.monotone,
            "iterations": self.iterations,
            "converged": self.converged,
            "grid": {"z_min": self.profile.grid.z_min, "h": self.profile.grid.h, "n": self.profile.grid.n},
        }

    def save(self, directory, stem: str):
        """Write ``<stem>.json`` (scalars) and ``<stem>.csv`` (profile)."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        data = self.scalars()
        data["profile_csv"] = f"{stem}.csv"
        (d / f"{stem}.json").write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        self.profile.to_csv(d / f"{stem}.csv")
        return d / f"{stem}.json"

    @classmethod
    def load(cls, json_path) -> "WaveSolution":
        path = Path(json_path)
        data = json.loads(path.read_text(encoding="utf-8"))
        prof = Profile.from_csv(path.parent / data["profile_csv"])
        g = data["grid"]
        if prof.grid.n != g["n"] or not math.isclose(prof.grid.h, g["h"], rel_tol=1e-9):
            raise ValueError(f"{path}: profile CSV does not match the grid recorded in the report")
        return cls(
            profile=prof,
            K=data["K"],
            ell=data["ell"],
            T=data["T"],
            E=data["E"],
            lambda_=data["lambda"],
            c=data["c"],
            c0=data["c0"],
            n_ell=data["n_ell"],
            residual_rel=data["residual_rel"],
            monotone=data["monotone"],
            iterations=data["iterations"],
            converged=data.get("converged", True),
        )


# -- multiplier and residual --------------------------------------------


def _virial(p: Profile, pot, quad) -> float:
    """Double integral of V'(D/m) D k/m over bonds, with D the elongation."""
    st = stencil(p.grid.h, pot, quad)
    if p.has_exact_slopes:
        return float(np.dot(st.gradient_slopes(p.cell_slopes), p.cell_slopes))
    return float(np.dot(st.gradient(p.values), p.values))


def lagrange_multiplier(p: Profile, pot: MicroPotential, quad: QuadratureSpec) -> float:
    """lambda = integral of q'^2 over the bond virial (stationarity tested against q itself)."""
    num = 2.0 * kinetic(p)
    den = _virial(p, pot, quad)
    if num == 0 or den == 0:
        raise DegenerateInputError("constant profile: Lagrange multiplier undefined")
    return num / den


def el_residual(p: Profile, c: float, pot: MicroPotential, quad: QuadratureSpec, mode: str = "variational"):
    """Residual of c^2 q'' = integral over [ell, delta] of f(D+) - f(D-) at interior nodes.

    ``variational`` takes the force term from the exact gradient of the
    discrete potential energy, i.e. the quadrature that the discretization
    itself induces; minimizers of the discrete problem then have residual at
    roundoff level. ``pointwise`` evaluates the bond integral directly with
    Gauss-Legendre nodes and interpolated q(z +/- xi); it carries an O(h^2)
    consistency error.

    Returns (residual array, relative norm).
    """
    if not c > 0:
        raise DomainError(f"speed must be positive, got {c}")
    h = p.grid.h
    s = p.slopes
    d2 = (s[1:] - s[:-1]) / h
    if mode == "variational":
        force = -grad_potential(p, pot, quad)[1:-1] / h
    elif mode == "pointwise":
        xi, w = quad.nodes(pot.delta)
        z = p.grid.z[1:-1]
        qz = p.values[1:-1][:, None]
        fwd = eval_at(p, z[:, None] + xi[None, :]) - qz
        bwd = qz - eval_at(p, z[:, None] - xi[None, :])
        force = (bond_force_f(pot, fwd, xi[None, :]) - bond_force_f(pot, bwd, xi[None, :])) @ w
    else:
        raise ValueError(f"unknown residual mode {mode!r}")
    r = c * c * d2 - force
    scale = c * c * np.linalg.norm(d2) + np.linalg.norm(force)
    rel = 0.0 if scale == 0 else float(np.linalg.norm(r) / scale)
    return r, rel


# -- minimization --------------------------------------------------------


def default_init(cfg: SolverConfig, pot: MicroPotential, grid: Grid, ell: float) -> Profile:
    spec = cfg.init
    kind = spec.kind
    if kind == "auto":
        kind = "tanh" if cfg.K < cfg.init_threshold_K else "piecewise_linear"
    if kind == "piecewise_linear":
        L = spec.L if spec.kind == kind else 2.0 * pot.delta
        p = piecewise_linear(spec.Lambda, L, grid, pot.delta)
        return Profile.from_slopes(grid, shift_cells(p.slopes, int(round(0.5 * L / grid.h))))
    if kind == "tanh":
        if spec.kind == kind:
            Lambda, beta = spec.Lambda, spec.beta
        else:
            Lambda = math.sqrt(4 * cfg.K / (TANH_C1 * (pot.delta**2 - ell**2)))
            beta = min(max((2 * Lambda) ** (2 / 3), 0.05), 2.0) / pot.delta
        return tanh_profile(Lambda, beta, grid)
    raise ValueError("warm_start requires an explicit initial profile")


def _window_warning(s, tag=""):
    peak = np.max(np.abs(s))
    if peak > 0 and max(abs(s[0]), abs(s[-1])) > 1e-8 * peak:
        msg = (
            f"{tag}slope at the window edge is {max(abs(s[0]), abs(s[-1])) / peak:.2e} of the peak; "
            "the wave may be wider than the grid, consider a larger z window"
        )
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        return True
    return False


def minimize(
    cfg: SolverConfig,
    pot: MicroPotential,
    quad: QuadratureSpec,
    init: Profile,
) -> WaveSolution:
    """Minimize T subject to E^ell = K starting from ``init``.

    Each iteration: projected descent step in slope space with Armijo
    backtracking (every trial re-projected onto E = K by rescaling), periodic
    monotonization, and recentering by whole cells. Stops once T has been
    flat to ``flat_rtol`` over ``flat_window`` iterations and the relative
    Euler-Lagrange residual is below ``tol_residual``.
    """
    if not pot.is_even:
        raise DomainError("minimize needs a symmetrized (even) potential")
    grid = init.grid
    h = grid.h
    st = stencil(h, pot, quad)
    K = cfg.K
    rtol_e = min(cfg.tol_constraint, 1e-10)

    def project(x):
        lam = solve_scale(
            lambda a: st.energy_slopes(a * x),
            lambda a: float(np.dot(st.gradient_slopes(a * x), x)),
            K,
            rtol_e,
        )
        return lam * x

    def recentered(x):
        prof = Profile.from_slopes(grid, x)
        k = int(round(half_rise_point(prof) / h))
        return x if k == 0 else project(shift_cells(x, k))

    s = np.abs(init.slopes)
    if not np.any(s):
        raise DegenerateInputError("initial profile is constant")
    s = recentered(project(s))
    T = 0.5 * h * float(np.dot(s, s))
    tau = cfg.step_init
    history = [T]
    res_history = []
    n_ell_val = n_ell(pot, quad.ell)
    c0 = sound_speed_c0(pot)

    def solution(x, it, converged):
        prof = Profile.from_slopes(grid, x)
        Tx = kinetic(prof)
        lam = lagrange_multiplier(prof, pot, quad)
        c_tmp = 1.0 / math.sqrt(lam)
        _, rel = el_residual(prof, c_tmp, pot, quad)
        ok = rel <= cfg.tol_residual
        return WaveSolution(
            profile=prof,
            K=K,
            ell=quad.ell,
            T=Tx,
            E=st.energy_slopes(x),
            lambda_=lam,
            c=c_tmp if ok else None,
            c0=c0,
            n_ell=n_ell_val,
            residual_rel=rel,
            monotone=bool(np.all(x >= -1e-12 * np.max(x))),
            iterations=it,
            converged=converged,
        )

    for it in range(1, cfg.max_iters + 1):
        gE = st.gradient_slopes(s) / h
        virial = h * float(np.dot(gE, s))
        lam = 2 * T / virial
        prof = Profile.from_slopes(grid, s)
        _, rel = el_residual(prof, 1.0 / math.sqrt(lam), pot, quad)
        res_history.append(rel)
        flat = len(history) > cfg.flat_window and (history[-cfg.flat_window - 1] - T) <= cfg.flat_rtol * T
        if rel <= cfg.tol_residual and flat:
            log.info("converged after %d iterations: T=%.15g residual=%.3e", it, T, rel)
            _window_warning(s)
            return solution(s, it, True)

        mu = float(np.dot(s, gE) / np.dot(gE, gE))
        d = s - mu * gE
        dn = h * float(np.dot(d, d))
        accepted = False
        while tau >= 1e-10:
            trial = project(s - tau * d)
            T_trial = 0.5 * h * float(np.dot(trial, trial))
            if T_trial <= T - cfg.armijo_c * tau * dn:
                accepted = True
                break
            tau *= 0.5
        if accepted:
            s = trial
            tau = min(2 * tau, cfg.step_max)
        else:
            # no descent left at working precision; only the residual test decides now
            tau = cfg.step_init
            if rel <= cfg.tol_residual:
                _window_warning(s)
                return solution(s, it, True)
        if it % cfg.monotonize_every == 0 and np.any(s < 0):
            s = project(np.abs(s))
        s = recentered(s)
        T_new = 0.5 * h * float(np.dot(s, s))
        if T_new > T * (1 + 1e-13):
            log.debug("T increased by %.3e at iteration %d", T_new / T - 1, it)
        T = T_new
        history.append(T)

    best = solution(s, cfg.max_iters, False)
    ratio = best.n_ell * pot.v_pp0 * best.T / K
    diagnostics = {
        "T_history": history,
        "residual_history": res_history,
        "energy_inequality_ratio": ratio,
    }
    if ratio >= 1 - 1e-3:
        diagnostics["flag"] = "no strict energy inequality"
    raise ConvergenceError(
        f"no convergence in {cfg.max_iters} iterations (residual {best.residual_rel:.3e})",
        best=best,
        diagnostics=diagnostics,
    )


def continue_in_ell(
    cfg: SolverConfig,
    pot: MicroPotential,
    grid: Grid,
    n_xi: int = 32,
    init: Optional[Profile] = None,
    z_pad: float = 0.0,
) -> list:
    """Solve along ``cfg.ell_schedule``, warm-starting each cutoff from the previous wave.

    On a convergence failure the partial list is attached to the raised
    error as ``err.diagnostics['partial']``.
    """
    results = []
    start = init
    for ell in cfg.ell_schedule:
        quad = QuadratureSpec(ell=ell, n_xi=n_xi, z_pad=z_pad)
        if start is None:
            start = default_init(cfg, pot, grid, ell)
        try:
            sol = minimize(cfg, pot, quad, start)
        except ConvergenceError as err:
            err.diagnostics["partial"] = results
            err.diagnostics["failed_ell"] = ell
            raise
        log.info("ell=%g: T=%.12g c=%s", ell, sol.T, sol.c)
        results.append(sol)
        start = sol.profile
    return results


def summary_rows(solutions) -> list:
    """Rows ``ell,T,E,lambda,c,residual`` for a continuation run."""
    return [
        {
            "ell": s.ell,
            "T": s.T,
            "E": s.E,
            "lambda": s.lambda_,
            "c": s.c if s.c is not None else math.nan,
            "residual": s.residual_rel,
        }
        for s in solutions
    ]
