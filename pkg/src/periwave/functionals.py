"""Discrete kinetic and potential energy functionals and their exact gradients.

The potential energy of a profile is

    E(q) = h * sum_i  sum_j w_j V((q(z_i + xi_j) - q(z_i)) / m(xi_j)) k(xi_j)

with Gauss-Legendre nodes xi_j on [ell, delta], linear interpolation for the
off-grid values q(z_i + xi_j) and the z-sum running over every node whose
bonds reach the support of q'. Both gradients below differentiate exactly
this expression, so they agree with finite differences to roundoff.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from periwave.errors import DegenerateInputError, DomainError, NumericError, ConvergenceError
from periwave.model import MicroPotential, n_ell, sound_speed_c0
from periwave.profile import Profile, eval_at

_CHUNK = 4096


def deterministic_sum(x) -> float:
    """Sum in fixed-size chunks, then across chunks: bit-reproducible for a given length."""
    x = np.ravel(np.asarray(x, dtype=float))
    n = x.size
    if n <= _CHUNK:
        return float(np.sum(x))
    pad = (-n) % _CHUNK
    if pad:
        x = np.concatenate([x, np.zeros(pad)])
    return float(np.sum(np.sum(x.reshape(-1, _CHUNK), axis=1)))


@dataclass(frozen=True)
class QuadratureSpec:
    ell: float = 0.0
    n_xi: int = 32
    z_pad: float = 0.0

    def __post_init__(self):
        if self.ell < 0:
            raise DomainError(f"cutoff ell must be non-negative, got {self.ell}")
        if self.n_xi < 4:
            raise DomainError(f"n_xi must be at least 4, got {self.n_xi}")
        if self.z_pad < 0:
            raise DomainError("z_pad must be non-negative")

    def nodes(self, delta: float):
        """Gauss-Legendre nodes and weights on [ell, delta]."""
        if self.ell >= delta:
            raise DomainError(f"cutoff must satisfy ell < delta, got ell={self.ell}, delta={delta}")
        t, w = np.polynomial.legendre.leggauss(self.n_xi)
        half = 0.5 * (delta - self.ell)
        return half * (t + 1) + self.ell, half * w

    def check(self, pot: MicroPotential) -> None:
        """Reject ell = 0 when the bond integrand is singular at xi -> 0."""
        self.nodes(pot.delta)
        if self.ell == 0:
            tiny = float(pot.kernel_weight(1e-12))
            ref = float(pot.kernel_weight(pot.delta))
            if not math.isfinite(tiny) or tiny > 1e6 * max(ref, 1e-300):
                raise DomainError("xi^2 k/m^2 is singular at 0 for this potential; use ell > 0")


@dataclass
class EnergyReport:
    T: float
    E: float
    ell: float
    K: float
    n_ell: float
    c0: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


class BondStencil:
    """Precomputed interpolation stencil for all bonds of one quadrature rule.

    For a uniform grid the shift z_i -> z_i + xi_j lands at the same fractional
    cell position for every i, so each bond reduces to a fixed integer offset
    ``a_j`` and weight ``theta_j``.
    """

    def __init__(self, h: float, pot: MicroPotential, quad: QuadratureSpec):
        quad.check(pot)
        self.h = h
        self.pot = pot
        self.quad = quad
        xi, w = quad.nodes(pot.delta)
        self.xi = xi
        pos = xi / h
        self.a = np.floor(pos).astype(int)
        self.theta = pos - self.a
        self.inv_m = 1.0 / pot.m(xi)
        self.kw = pot.k(xi) * w
        self.reach = int(self.a.max()) + 2
        self.left_pad = int(math.ceil((pot.delta + quad.z_pad) / h)) + 1
        self._cp = [pot._derivative_coeffs(k) for k in (0, 1)]

    def _v(self, s, order):
        cp, cn = self._cp[order]
        return np.where(s >= 0, np.polynomial.polynomial.polyval(s, cp), np.polynomial.polynomial.polyval(s, cn))

    def differences(self, u_ext, n_eval):
        """Bond elongations, shape (n_xi, n_eval)."""
        i = np.arange(n_eval)
        lo = u_ext[i[None, :] + self.a[:, None]]
        hi = u_ext[i[None, :] + self.a[:, None] + 1]
        return (1.0 - self.theta)[:, None] * lo + self.theta[:, None] * hi - u_ext[None, :n_eval]

    def density(self, u_ext, n_eval):
        s = self.differences(u_ext, n_eval) * self.inv_m[:, None]
        vals = self._v(s, 0)
        if not np.all(np.isfinite(vals)):
            j, i = np.argwhere(~np.isfinite(vals))[0]
            raise NumericError("non-finite V", location=f"node {i}, xi={self.xi[j]:.6g}")
        return self.kw @ vals

    def bond_forces(self, u_ext, n_eval):
        """kw_j V'(s_ji) / m_j, shape (n_xi, n_eval)."""
        s = self.differences(u_ext, n_eval) * self.inv_m[:, None]
        f = self._v(s, 1) * (self.kw * self.inv_m)[:, None]
        if not np.all(np.isfinite(f)):
            j, i = np.argwhere(~np.isfinite(f))[0]
            raise NumericError("non-finite bond force", location=f"node {i}, xi={self.xi[j]:.6g}")
        return f

    def scatter(self, forces, n_ext):
        """Adjoint of ``differences``: gradient on the extended array."""
        n_eval = forces.shape[1]
        g = np.zeros(n_ext)
        g[:n_eval] -= forces.sum(axis=0)
        for j in range(len(self.a)):
            a = self.a[j]
            g[a : a + n_eval] += (1.0 - self.theta[j]) * forces[j]
            g[a + 1 : a + 1 + n_eval] += self.theta[j] * forces[j]
        return g

    # -- constant-extension layout ---------------------------------------

    def extend(self, q):
        return np.concatenate([np.full(self.left_pad, q[0]), q, np.full(self.reach, q[-1])])

    def n_eval(self, n):
        return self.left_pad + n

    def energy(self, q) -> float:
        u = self.extend(q)
        return self.h * deterministic_sum(self.density(u, self.n_eval(len(q))))

    def gradient(self, q) -> np.ndarray:
        n = len(q)
        u = self.extend(q)
        g_ext = self.scatter(self.bond_forces(u, self.n_eval(n)), len(u))
        g = g_ext[self.left_pad : self.left_pad + n].copy()
        g[0] += g_ext[: self.left_pad].sum()
        g[-1] += g_ext[self.left_pad + n :].sum()
        return self.h * g

    def virial(self, q) -> float:
        """sum of V'(s) s k over all bonds: <grad E, q>."""
        return float(np.dot(self.gradient(q), q))

    # -- slope layout -----------------------------------------------------
    # Same functional written in the n - 1 cell slopes s_k = (q_{k+1} - q_k)/h.
    # Elongations are windowed sums of slopes; taking them from prefix sums
    # left of the peak and suffix sums right of it keeps full relative
    # precision in the tails, where q-value differences would cancel.

    @staticmethod
    def _running_sums(x):
        prefix = np.concatenate([[0.0], np.cumsum(x)])
        suffix = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])
        return prefix, suffix

    @staticmethod
    def _window_sums(sums, width):
        """sum_{m=i}^{i+width-1} x_m for every admissible start i."""
        prefix, suffix = sums
        i = np.arange(len(prefix) - width)
        fwd = prefix[i + width] - prefix[i]
        bwd = suffix[i] - suffix[i + width]
        return np.where(np.abs(prefix[i + width]) <= np.abs(suffix[i]), fwd, bwd)

    def _slope_layout(self, s):
        return np.concatenate([np.zeros(self.left_pad), s, np.zeros(self.reach)])

    def slope_differences(self, s_ext, n_eval):
        h = self.h
        out = np.empty((len(self.a), n_eval))
        cache = {}
        sums = self._running_sums(s_ext)
        for j, (a, th) in enumerate(zip(self.a, self.theta)):
            if a not in cache:
                cache[a] = self._window_sums(sums, a) if a > 0 else np.zeros(len(s_ext) + 1)
            out[j] = h * (cache[a][:n_eval] + th * s_ext[a : a + n_eval])
        return out

    def energy_slopes(self, s) -> float:
        s_ext = self._slope_layout(s)
        n_eval = self.left_pad + len(s) + 1
        d = self.slope_differences(s_ext, n_eval) * self.inv_m[:, None]
        return self.h * deterministic_sum(self.kw @ self._v(d, 0))

    def gradient_slopes(self, s) -> np.ndarray:
        """dE/ds_k for each cell slope."""
        h = self.h
        s_ext = self._slope_layout(s)
        n_eval = self.left_pad + len(s) + 1
        d = self.slope_differences(s_ext, n_eval) * self.inv_m[:, None]
        f = self._v(d, 1) * (self.kw * self.inv_m)[:, None]
        if not np.all(np.isfinite(f)):
            raise NumericError("non-finite bond force in slope gradient")
        g = np.zeros(len(s_ext))
        for j, (a, th) in enumerate(zip(self.a, self.theta)):
            fj = f[j]
            if a > 0:
                # cell k is covered by bonds starting at i = k - a + 1 .. k
                padded = np.concatenate([np.zeros(a - 1), fj, np.zeros(a - 1)])
                w = self._window_sums(self._running_sums(padded), a)
                m = min(len(w), len(g))
                g[:m] += w[:m]
            g[a : a + n_eval] += th * fj
        core = g[self.left_pad : self.left_pad + len(s)]
        return h * h * core

    # -- periodic layout --------------------------------------------------

    def periodic_energy(self, u, jump: float = 0.0) -> float:
        """Energy of a field with u(x + P) = u(x) + jump."""
        ext = np.concatenate([u, u[: self.reach] + jump])
        return self.h * deterministic_sum(self.density(ext, len(u)))

    def periodic_gradient(self, u, jump: float = 0.0) -> np.ndarray:
        n = len(u)
        if self.reach > n:
            raise DomainError("periodic window shorter than the horizon")
        ext = np.concatenate([u, u[: self.reach] + jump])
        g_ext = self.scatter(self.bond_forces(ext, n), len(ext))
        g = g_ext[:n].copy()
        g[: self.reach] += g_ext[n:]
        return self.h * g


@functools.lru_cache(maxsize=64)
def stencil(h: float, pot: MicroPotential, quad: QuadratureSpec) -> BondStencil:
    return BondStencil(h, pot, quad)


# -- public functionals --------------------------------------------------


def kinetic(p: Profile) -> float:
    """T = (1/2) integral of q'^2; exact for the piecewise-linear interpolant."""
    s = p.slopes
    return 0.5 * p.grid.h * deterministic_sum(s * s)


def grad_kinetic(p: Profile) -> np.ndarray:
    d = np.diff(p.values) / p.grid.h
    g = np.zeros(p.grid.n)
    g[:-1] -= d
    g[1:] += d
    return g


def potential_density(p: Profile, pot: MicroPotential, quad: QuadratureSpec, z):
    """U(q; z), the bond energy stored at position z."""
    xi, w = quad.nodes(pot.delta)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    diff = eval_at(p, z_arr[:, None] + xi[None, :]) - eval_at(p, z_arr)[:, None]
    vals = pot.v(diff / pot.m(xi)[None, :]) * pot.k(xi)[None, :]
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise NumericError("non-finite V", location=f"z={z_arr[i]:.6g}, xi={xi[j]:.6g}")
    out = vals @ w
    return float(out[0]) if np.ndim(z) == 0 else out


def potential_energy(p: Profile, pot: MicroPotential, quad: QuadratureSpec) -> float:
    st = stencil(p.grid.h, pot, quad)
    if p.has_exact_slopes:
        return st.energy_slopes(p.cell_slopes)
    return st.energy(p.values)


def grad_potential(p: Profile, pot: MicroPotential, quad: QuadratureSpec) -> np.ndarray:
    """dE/dq_i for every node."""
    st = stencil(p.grid.h, pot, quad)
    if p.has_exact_slopes:
        return slope_to_node_gradient(st.gradient_slopes(p.cell_slopes), p.grid.h)
    return st.gradient(p.values)


def slope_to_node_gradient(gs, h: float) -> np.ndarray:
    """Chain rule from cell-slope to nodal gradient (s_k = (q_{k+1} - q_k)/h)."""
    padded = np.concatenate([[0.0], gs, [0.0]])
    return (padded[:-1] - padded[1:]) / h


def energy_report(p: Profile, pot: MicroPotential, quad: QuadratureSpec, K: float = math.nan) -> EnergyReport:
    return EnergyReport(
        T=kinetic(p),
        E=potential_energy(p, pot, quad),
        ell=quad.ell,
        K=K,
        n_ell=n_ell(pot, quad.ell),
        c0=sound_speed_c0(pot),
    )


def solve_scale(energy_at, denergy_at, K: float, rtol: float = 1e-10) -> float:
    """Root lam > 0 of energy_at(lam) = K for an increasing energy curve.

    Superquadraticity (E(lam x) >= lam^2 E(x) for lam >= 1) brackets the root
    between 1 and sqrt(K / E(x)); safeguarded Newton polishes inside the
    bracket, falling back to bisection.
    """
    if not K > 0:
        raise DomainError(f"target energy must be positive, got {K}")
    e1 = energy_at(1.0)
    if e1 <= 0:
        raise DegenerateInputError("profile has zero potential energy; cannot rescale")
    if abs(e1 - K) <= rtol * K:
        return 1.0
    r = math.sqrt(K / e1)
    lo, hi = min(1.0, r), max(1.0, r)
    while energy_at(lo) - K > 0:
        lo *= 0.5
        if lo < 1e-8:
            raise ConvergenceError("no bracket for rescaling (lower end)")
    while energy_at(hi) - K < 0:
        hi *= 2.0
        if hi > 1e8:
            raise ConvergenceError("no bracket for rescaling (upper end)")

    lam = r if lo < r < hi else 0.5 * (lo + hi)
    for _ in range(200):
        f = energy_at(lam) - K
        if abs(f) <= rtol * K:
            return lam
        if f > 0:
            hi = lam
        else:
            lo = lam
        df = denergy_at(lam)
        step = lam - f / df if df > 0 else math.nan
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            break
    f = energy_at(lam) - K
    if abs(f) <= rtol * K:
        return lam
    raise ConvergenceError(f"rescaling did not reach |E-K| <= {rtol:g} K (residual {f:.3e})")


def rescale_to_energy(p: Profile, pot: MicroPotential, quad: QuadratureSpec, K: float, rtol: float = 1e-10):
    """Find lam > 0 with E(lam * p) = K; returns (lam, lam * p).

    Requires lam -> E(lam p) increasing, which holds for symmetrized
    superquadratic V.
    """
    st = stencil(p.grid.h, pot, quad)
    if p.has_exact_slopes:
        s = p.slopes
        lam = solve_scale(
            lambda x: st.energy_slopes(x * s),
            lambda x: float(np.dot(st.gradient_slopes(x * s), s)),
            K,
            rtol,
        )
    else:
        q = p.values
        lam = solve_scale(
            lambda x: st.energy(x * q),
            lambda x: float(np.dot(st.gradient(x * q), q)),
            K,
            rtol,
        )
    return lam, p.scaled(lam)
