"""Time-domain integration of the peridynamic equation of motion.

The displacement lives on a periodic window of length P up to a constant
jump, u(x + P) = u(x) + jump, so a single kink-shaped wave can travel
without boundaries and without a background strain. The internal force is
the exact negative gradient of the discrete potential energy, which makes
velocity Verlet symplectic for the semi-discrete system.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from periwave.errors import DomainError, NumericError, WindowTooSmallError
from periwave.functionals import QuadratureSpec, stencil
from periwave.model import MicroPotential, sound_speed_c0
from periwave.profile import eval_at

DT_FACTOR = 0.25
DT_GUARD = 0.5


@dataclass(frozen=True, eq=False)
class DynState:
    P: float
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    jump: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 1 or u.shape != v.shape:
            raise DomainError("u and v must be 1D arrays of equal length")
        if not self.P > 0:
            raise DomainError(f"period must be positive, got {self.P}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def N_x(self) -> int:
        return len(self.u)

    @property
    def h(self) -> float:
        return self.P / self.N_x

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(self.N_x)

    def strain(self) -> np.ndarray:
        """Cell strains (u_{i+1} - u_i)/h, periodic."""
        nxt = np.concatenate([self.u[1:], [self.u[0] + self.jump]])
        return (nxt - self.u) / self.h


@dataclass
class PropagationReport:
    measured_speed: float
    predicted_speed: float
    speed_rel_error: float
    shape_error: float
    energy_drift: float
    horizon: float
    dt: float
    steps: int
    P: float
    N_x: int
    times: list = field(default_factory=list, repr=False)
    positions: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def passed(self, speed_tol: float = 0.01, shape_tol: float = 0.02) -> bool:
        return self.speed_rel_error <= speed_tol and self.shape_error <= shape_tol


def internal_force(state: DynState, pot: MicroPotential, quad: QuadratureSpec) -> np.ndarray:
    """Acceleration at every node: the integral of f(u(x+xi) - u(x), xi) over 0 < |xi| < delta.

    Bonds with |xi| < ell are left out. Computed as -grad E / h, which equals
    the two-sided bond integral by antisymmetry of f.
    """
    st = stencil(state.h, pot, quad)
    acc = -st.periodic_gradient(state.u, state.jump) / state.h
    if not np.all(np.isfinite(acc)):
        i = int(np.argmax(~np.isfinite(acc)))
        raise NumericError("non-finite internal force", location=f"node {i}")
    return acc


def total_energy(state: DynState, pot: MicroPotential, quad: QuadratureSpec) -> float:
    st = stencil(state.h, pot, quad)
    return 0.5 * state.h * float(np.dot(state.v, state.v)) + st.periodic_energy(state.u, state.jump)


def _check_dt(dt: float, h: float, pot: MicroPotential):
    c0 = sound_speed_c0(pot)
    if c0 > 0 and abs(dt) > DT_GUARD * h / c0 * (1 + 1e-12):
        raise ValueError(f"|dt| = {abs(dt):.3g} exceeds the stability guard {DT_GUARD} h/c0 = {DT_GUARD * h / c0:.3g}")


def step_verlet(state: DynState, pot: MicroPotential, quad: QuadratureSpec, dt: float, acc=None):
    """One velocity-Verlet step; returns (new state, acceleration at the new state).

    Negative dt integrates backwards. ``acc`` may pass the acceleration of
    ``state`` from the previous step to save a force evaluation.
    """
    _check_dt(dt, state.h, pot)
    a0 = internal_force(state, pot, quad) if acc is None else acc
    v_half = state.v + 0.5 * dt * a0
    u1 = state.u + dt * v_half
    mid = DynState(state.P, u1, v_half, state.t + dt, state.jump)
    a1 = internal_force(mid, pot, quad)
    return DynState(state.P, u1, v_half + 0.5 * dt * a1, state.t + dt, state.jump), a1


def wave_width(profile, rel: float = 1e-6) -> float:
    """Length of the region where the slope exceeds ``rel`` times its peak."""
    s = np.abs(profile.slopes)
    idx = np.nonzero(s >= rel * s.max())[0]
    return float((idx[-1] - idx[0] + 1) * profile.grid.h)


def _shift_periodic(e, shift_cells):
    """Band-limited translation of a periodic field by a fractional number of cells."""
    n = len(e)
    k = np.fft.rfftfreq(n) * 2 * np.pi
    return np.fft.irfft(np.fft.rfft(e) * np.exp(-1j * k * shift_cells), n)


def _locate(e, e0_hat, guess):
    """Shift (in cells) that best aligns e with the initial strain, and the relative mismatch."""
    n = len(e)
    corr = np.fft.irfft(np.fft.rfft(e) * np.conj(e0_hat), n)
    k = int(np.argmax(corr))
    # prefer the peak representative nearest the previous position
    k = k + n * round((guess - k) / n)
    e0 = np.fft.irfft(e0_hat, n)
    norm = np.linalg.norm(e0)

    def mismatch(s):
        return np.linalg.norm(e - _shift_periodic(e0, s)) / norm

    res = minimize_scalar(mismatch, bracket=(k - 1.0, k, k + 1.0), tol=1e-10)
    return float(res.x), float(res.fun)


def simulate_travelling_wave(
    sol,
    pot: MicroPotential,
    quad: QuadratureSpec,
    horizon: float,
    P: float = None,
    N_x: int = None,
    dt: float = None,
    v_scale: float = 1.0,
    samples: int = 40,
    trajectory=None,
    stride: int = 0,
) -> PropagationReport:
    """Launch u = q(x), v = -c q'(x) and measure how the wave propagates.

    ``v_scale`` multiplies the initial velocity (0 gives the negative
    control). Defaults: grid spacing from the solution, P = max(8 width,
    4 (width + delta)), dt = 0.25 h / c0. ``trajectory`` is a path for
    ``t,x,u,v`` snapshots every ``stride`` steps.
    """
    if sol.c is None:
        raise DomainError("solution has no certified speed (residual above tolerance)")
    if horizon < 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")
    c = sol.c
    prof = sol.profile
    width = wave_width(prof)
    min_P = 4 * (width + pot.delta)
    if P is None:
        P = max(8 * width, min_P)
    if N_x is None:
        N_x = int(math.ceil(P / prof.grid.h))
        P = N_x * prof.grid.h
    if P < min_P:
        raise WindowTooSmallError(f"period {P:g} below 4 (wave width + delta) = {min_P:g}")
    h = P / N_x
    c0 = sound_speed_c0(pot)
    if dt is None:
        dt = DT_FACTOR * h / c0
    _check_dt(dt, h, pot)

    x = h * np.arange(N_x)
    center = 0.5 * P
    u0 = eval_at(prof, x - center)
    jump = float(prof.values[-1] - prof.values[0])
    # q' at the nodes, from cell slopes interpolated to node positions
    zc = prof.grid.z[:-1] + 0.5 * prof.grid.h
    dq = np.interp(x - center, zc, prof.slopes, left=0.0, right=0.0)
    state = DynState(P, u0, -v_scale * c * dq, 0.0, jump)

    e0 = state.strain()
    e0_hat = np.fft.rfft(e0)
    E0 = total_energy(state, pot, quad)
    n_steps = int(round(horizon / dt))
    sample_every = max(1, n_steps // samples) if n_steps else 1
    times, positions, shape_errs, drifts = [0.0], [0.0], [0.0], [0.0]
    writer = None
    fh = None
    if trajectory is not None and stride > 0:
        fh = open(trajectory, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "u", "v"])

    def dump(st):
        for row in zip(np.full(N_x, st.t), x, st.u, st.v):
            writer.writerow([repr(float(r)) for r in row])

    try:
        if writer:
            dump(state)
        acc = None
        guess = 0.0
        for k in range(1, n_steps + 1):
            state, acc = step_verlet(state, pot, quad, dt, acc)
            if writer and k % stride == 0:
                dump(state)
            if k % sample_every == 0 or k == n_steps:
                pos, err = _locate(state.strain(), e0_hat, guess)
                guess = pos
                times.append(state.t)
                positions.append(pos * h)
                shape_errs.append(err)
                drifts.append(abs(total_energy(state, pot, quad) - E0) / E0)
    finally:
        if fh:
            fh.close()

    if len(times) >= 2:
        speed = float(np.polyfit(times, positions, 1)[0])
    else:
        speed = c
    return PropagationReport(
        measured_speed=speed,
        predicted_speed=c,
        speed_rel_error=abs(speed - c) / c,
        shape_error=float(max(shape_errs)),
        energy_drift=float(max(drifts)),
        horizon=horizon,
        dt=dt,
        steps=n_steps,
        P=P,
        N_x=N_x,
        times=times,
        positions=positions,
    )
