"""Micropotentials of scaling form W(eta, xi) = V(eta / m(xi)) k(xi).

V is stored as a pair of polynomials, one for s >= 0 and one for s < 0, which
covers Silling's model (original and symmetrized), the harmonic potential and
arbitrary piecewise-polynomial custom laws. The bond functions are power laws
m(xi) = sgn(xi)|xi|^p, k(xi) = |xi|^r unless explicit callables are supplied.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from periwave.errors import DomainError, NumericError


class VKind(str, Enum):
    SILLING_ORIGINAL = "silling_original"
    SILLING_SYMMETRIZED = "silling_symmetrized"
    QUADRATIC = "quadratic"
    CUSTOM = "custom"


class Side(str, Enum):
    """Half-line on which V is superquadratic."""

    NON_NEGATIVE = "non_negative"
    NON_POSITIVE = "non_positive"
    BOTH = "both"


_SILLING_POS = (0.0, 0.0, 0.5)
_SILLING_NEG = (0.0, 0.0, 0.5, -1.0 / 6.0)
_SILLING_SYM_POS = (0.0, 0.0, 0.5, 1.0 / 6.0)

CONFIG_KEYS = frozenset(
    {
        "kind",
        "delta",
        "coeffs_pos",
        "coeffs_neg",
        "m_exponent",
        "k_exponent",
        "gamma1",
        "gamma2",
        "c1",
        "c2",
        "superquadratic_side",
        "stiffness",
    }
)


@dataclass(frozen=True)
class MicroPotential:
    """Material law of a bond-based peridynamic bar.

    ``coeffs_pos[n]`` / ``coeffs_neg[n]`` are the coefficients of s**n in V
    on s >= 0 and s < 0. Use the ``silling``, ``quadratic`` or ``custom``
    constructors rather than filling the fields by hand.
    """

    delta: float = 1.0
    v_kind: VKind = VKind.SILLING_ORIGINAL
    coeffs_pos: tuple = _SILLING_POS
    coeffs_neg: tuple = _SILLING_NEG
    gamma1: float = 1.0
    gamma2: float = 1.0
    c1: float = 0.5
    c2: float = 0.5
    m_exponent: float = 1.0
    k_exponent: float = 1.0
    superquadratic_side: Side = Side.NON_POSITIVE
    m_func: Optional[Callable] = field(default=None, compare=False, repr=False)
    k_func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"horizon delta must be positive, got {self.delta}")
        if not 0 < self.gamma1 <= self.gamma2:
            raise DomainError("growth exponents must satisfy 0 < gamma1 <= gamma2")
        pos = tuple(float(c) for c in self.coeffs_pos)
        neg = tuple(float(c) for c in self.coeffs_neg)
        if len(pos) < 3 or len(neg) < 3:
            raise DomainError("V needs coefficients up to at least s**2 on both sides")
        if pos[2] != neg[2]:
            # V must be C^2: one-sided second derivatives at 0 have to agree
            raise DomainError(
                f"one-sided V''(0) differ: {2 * pos[2]} (s>0) vs {2 * neg[2]} (s<0)"
            )
        object.__setattr__(self, "coeffs_pos", pos)
        object.__setattr__(self, "coeffs_neg", neg)
        object.__setattr__(self, "v_kind", VKind(self.v_kind))
        object.__setattr__(self, "superquadratic_side", Side(self.superquadratic_side))

    # -- constructors ---------------------------------------------------

    @classmethod
    def silling(cls, delta: float = 1.0, symmetrized: bool = False) -> "MicroPotential":
        pot = cls(delta=delta)
        return pot.symmetrized() if symmetrized else pot

    @classmethod
    def quadratic(cls, delta: float = 1.0, stiffness: float = 1.0) -> "MicroPotential":
        """Harmonic law V(s) = stiffness * s**2 / 2 with Silling's m and k."""
        c = (0.0, 0.0, 0.5 * stiffness)
        return cls(
            delta=delta,
            v_kind=VKind.QUADRATIC,
            coeffs_pos=c,
            coeffs_neg=c,
            c1=1.0,
            c2=1.0,
            superquadratic_side=Side.BOTH,
        )

    @classmethod
    def custom(cls, coeffs_pos, coeffs_neg, **kwargs) -> "MicroPotential":
        return cls(v_kind=VKind.CUSTOM, coeffs_pos=coeffs_pos, coeffs_neg=coeffs_neg, **kwargs)

    @classmethod
    def from_config(cls, section: dict) -> "MicroPotential":
        """Build from a ``potential`` config section.

        Keys: ``kind`` (silling_original | silling_symmetrized | quadratic |
        custom), ``delta`` and, for custom, ``coeffs_pos``/``coeffs_neg`` plus
        the optional exponents and growth constants.
        """
        unknown = set(section) - CONFIG_KEYS
        if unknown:
            raise KeyError(f"potential: unknown key(s) {sorted(unknown)}")
        if "kind" not in section:
            raise KeyError("potential.kind is required")
        kind = VKind(section["kind"])
        delta = float(section.get("delta", 1.0))
        if kind is VKind.SILLING_ORIGINAL:
            return cls.silling(delta)
        if kind is VKind.SILLING_SYMMETRIZED:
            return cls.silling(delta, symmetrized=True)
        if kind is VKind.QUADRATIC:
            return cls.quadratic(delta, float(section.get("stiffness", 1.0)))
        extra = {
            k: section[k]
            for k in ("m_exponent", "k_exponent", "gamma1", "gamma2", "c1", "c2", "superquadratic_side")
            if k in section
        }
        return cls.custom(section["coeffs_pos"], section["coeffs_neg"], delta=delta, **extra)

    # -- derived quantities --------------------------------------------

    @property
    def v_pp0(self) -> float:
        """V''(0)."""
        return 2.0 * self.coeffs_pos[2]

    @property
    def is_even(self) -> bool:
        flipped = tuple(c * (-1) ** n for n, c in enumerate(self.coeffs_neg))
        return _trim(flipped) == _trim(self.coeffs_pos)

    def symmetrized(self) -> "MicroPotential":
        """Even extension of V from its superquadratic half-line."""
        side = self.superquadratic_side
        if side is Side.BOTH:
            return self
        if side is Side.NON_POSITIVE:
            neg = self.coeffs_neg
            pos = tuple(c * (-1) ** n for n, c in enumerate(neg))
        else:
            pos = self.coeffs_pos
            neg = tuple(c * (-1) ** n for n, c in enumerate(pos))
        kind = VKind.SILLING_SYMMETRIZED if self.v_kind is VKind.SILLING_ORIGINAL else VKind.CUSTOM
        return replace(self, v_kind=kind, coeffs_pos=pos, coeffs_neg=neg, superquadratic_side=Side.BOTH)

    def m(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.m_func is not None:
            return self.m_func(xi)
        return np.sign(xi) * np.abs(xi) ** self.m_exponent

    def k(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.k_func is not None:
            return self.k_func(xi)
        return np.abs(xi) ** self.k_exponent

    def v(self, s, order: int = 0):
        """Vectorized V and its first two derivatives."""
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
        s = np.asarray(s, dtype=float)
        cp, cn = self._derivative_coeffs(order)
        return np.where(s >= 0, P.polyval(s, cp), P.polyval(s, cn))

    def _derivative_coeffs(self, order):
        cp, cn = np.array(self.coeffs_pos), np.array(self.coeffs_neg)
        if order:
            cp, cn = P.polyder(cp, order), P.polyder(cn, order)
        return cp, cn

    def kernel_weight(self, xi):
        """xi**2 k(xi) / m(xi)**2, the density of the linear-wave measure."""
        xi = np.asarray(xi, dtype=float)
        return xi**2 * self.k(xi) / self.m(xi) ** 2


def _trim(coeffs):
    c = list(coeffs)
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass
class HypothesisReport:
    h1_convex_ok: bool
    h1_superquadratic_ok: bool
    h1_growth_bound_ok: bool
    h2_integral_1: float
    h2_integral_2: float
    notes: list = field(default_factory=list)

    @property
    def h2_ok(self) -> bool:
        return all(math.isfinite(v) and v >= 0 for v in (self.h2_integral_1, self.h2_integral_2))

    @property
    def all_ok(self) -> bool:
        return self.h1_convex_ok and self.h1_superquadratic_ok and self.h1_growth_bound_ok and self.h2_ok

    def to_dict(self) -> dict:
        return {
            "h1_convex_ok": self.h1_convex_ok,
            "h1_superquadratic_ok": self.h1_superquadratic_ok,
            "h1_growth_bound_ok": self.h1_growth_bound_ok,
            "h2_integral_1": self.h2_integral_1,
            "h2_integral_2": self.h2_integral_2,
            "h2_ok": self.h2_ok,
            "notes": list(self.notes),
        }


# -- point evaluations ---------------------------------------------------


def eval_v(pot: MicroPotential, s, order: int = 0):
    """V(s), V'(s) or V''(s). At s = 0 the two one-sided values agree."""
    out = pot.v(s, order)
    return float(out) if np.ndim(out) == 0 else out


def _check_bond(pot, xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0) or np.any(np.abs(xi) > pot.delta):
        raise DomainError(f"bond length must satisfy 0 < |xi| <= delta={pot.delta}")
    return xi


def micro_w(pot: MicroPotential, eta, xi):
    xi = _check_bond(pot, xi)
    out = pot.v(np.asarray(eta, dtype=float) / pot.m(xi)) * pot.k(xi)
    return float(out) if np.ndim(out) == 0 else out


def bond_force_f(pot: MicroPotential, eta, xi):
    """f = dW/d(eta) = V'(eta/m) k/m."""
    xi = _check_bond(pot, xi)
    mx = pot.m(xi)
    out = pot.v(np.asarray(eta, dtype=float) / mx, 1) * pot.k(xi) / mx
    return float(out) if np.ndim(out) == 0 else out


# -- integrals over bond length -----------------------------------------

_EPS_INNER = (1e-6, 1e-8)


def kernel_integral(g: Callable, lo: float, hi: float) -> float:
    """Integral of a bond-length density g over [lo, hi].

    For lo == 0 the integrand may be singular; it is integrated from a small
    inner cutoff and the remainder is extrapolated from the local power law
    g ~ C xi**a. Returns inf when a <= -1 (non-integrable).
    """
    if lo > 0:
        return _quad(g, lo, hi)
    e1, e2 = _EPS_INNER
    g1, g2 = float(g(e1)), float(g(e2))
    if not (math.isfinite(g1) and math.isfinite(g2)):
        raise NumericError("non-finite kernel value", location=f"xi={e2}")
    tail = 0.0
    if g1 != 0.0 and g2 != 0.0 and g1 * g2 > 0:
        a = math.log(g1 / g2) / math.log(e1 / e2)
        if a <= -1 + 1e-9:
            return math.inf
        tail = g2 * e2 / (a + 1)
    return _quad(g, e2, hi) + tail


def _quad(g, lo, hi):
    # oscillatory kernels at large wavenumber stall slightly above 1e-13;
    # the result is still far more accurate than any use downstream
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, lo, hi, limit=200, epsabs=0.0, epsrel=1e-13)
    return float(val)


def n_ell(pot: MicroPotential, ell: float) -> float:
    """Weighted second moment of the kernel, integral of xi^2 k / m^2 over [ell, delta]."""
    if ell < 0 or ell >= pot.delta:
        raise DomainError(f"cutoff must satisfy 0 <= ell < delta, got ell={ell}")
    return kernel_integral(lambda x: float(pot.kernel_weight(x)), ell, pot.delta)


def sound_speed_c0(pot: MicroPotential, quad=None) -> float:
    """Long-wave speed c0 = sqrt(V''(0) * N_0)."""
    if pot.v_pp0 == 0:
        return 0.0
    moment = n_ell(pot, 0.0)
    if not math.isfinite(moment):
        raise DomainError("second-moment integral diverges; c0 undefined")
    return math.sqrt(pot.v_pp0 * moment)


def dispersion(pot: MicroPotential, kappa: float, quad=None):
    """Linear dispersion: returns (omega, phase velocity, group velocity)."""
    if kappa < 0:
        raise ValueError(f"wavenumber must be non-negative, got {kappa}")
    c0 = sound_speed_c0(pot)
    if kappa == 0:
        return 0.0, c0, c0
    half = 0.5 * kappa

    def sinc(x):
        return np.sinc(x / np.pi)

    def dgamma(x):
        return pot.v_pp0 * float(pot.kernel_weight(x))

    w2 = kappa**2 * kernel_integral(lambda x: sinc(half * x) ** 2 * dgamma(x), 0.0, pot.delta)
    omega = math.sqrt(w2)
    if omega == 0:
        return 0.0, 0.0, 0.0
    cross = kernel_integral(lambda x: math.cos(half * x) * sinc(half * x) * dgamma(x), 0.0, pot.delta)
    return omega, omega / kappa, kappa / omega * cross


# -- hypothesis checks -------------------------------------------------


def _side_samples(side: Side, n: int = 121):
    mags = np.logspace(-3, 3, n)
    if side is Side.NON_NEGATIVE:
        return mags
    if side is Side.NON_POSITIVE:
        return -mags
    return np.concatenate([-mags[::-1], mags])


def check_hypotheses(pot: MicroPotential, quad=None) -> HypothesisReport:
    """Sampled checks of the structural hypotheses on V, m and k.

    Convexity, monotonicity away from 0 and superquadraticity V(ls) >= l^2 V(s)
    (l in {1.5, 2, 4}) are checked on a log grid of |s| in [1e-3, 1e3] on the
    superquadratic side; the growth bound on V'' on both sides. The two
    integrability conditions are evaluated with an extrapolated inner cutoff.
    """
    notes = []
    s = _side_samples(pot.superquadratic_side)
    with np.errstate(all="ignore"):
        v0, v1, v2 = pot.v(s), pot.v(s, 1), pot.v(s, 2)
    bad = ~(np.isfinite(v0) & np.isfinite(v1) & np.isfinite(v2))
    if bad.any():
        notes.append(f"non-finite V evaluation at s={s[bad][0]:.6g}")
        return HypothesisReport(False, False, False, math.nan, math.nan, notes)

    origin_ok = pot.v(0.0) == 0 and pot.v(0.0, 1) == 0 and pot.v_pp0 > 0
    if not origin_ok:
        notes.append("V(0)=V'(0)=0, V''(0)>0 violated")
    convex = bool(np.all(v2 >= 0)) and bool(np.all(v1 * np.sign(s) >= 0)) and origin_ok

    superq = True
    scale = np.abs(v0) + 1e-300
    for lam in (1.5, 2.0, 4.0):
        gap = pot.v(lam * s) - lam**2 * v0
        if np.any(gap < -1e-12 * lam**2 * scale):
            superq = False
            notes.append(f"superquadraticity fails for lambda={lam}")
            break

    x = np.concatenate([-np.logspace(-3, 3, 121), np.logspace(-3, 3, 121)])
    bound = pot.v_pp0 + pot.c1 * np.abs(x) ** pot.gamma1 + pot.c2 * np.abs(x) ** pot.gamma2
    vpp = pot.v(x, 2)
    growth = bool(np.all(vpp <= bound * (1 + 1e-12)))
    if not growth:
        worst = x[np.argmax(vpp - bound)]
        notes.append(f"growth bound on V'' fails near x={worst:.6g}")
    if pot.c1 < 1 or pot.c2 < 1:
        notes.append(
            f"growth constants c1={pot.c1:g}, c2={pot.c2:g} are below 1; "
            f"the bound V'' <= V''(0) + c1|x|^g1 + c2|x|^g2 is checked with the stored values"
        )

    def integrand_1(xi):
        return float(xi**2 * pot.k(xi) / pot.m(xi) ** (pot.gamma2 + 2))

    def integrand_2(xi):
        return float(pot.k(xi) / pot.m(xi))

    h2 = []
    for name, g in (("first", integrand_1), ("second", integrand_2)):
        try:
            val = kernel_integral(g, 0.0, pot.delta)
        except NumericError as exc:
            notes.append(f"{name} integrability integral: {exc}")
            val = math.nan
        if math.isinf(val):
            notes.append(f"{name} integrability integral diverges at xi -> 0")
        h2.append(val)
    return HypothesisReport(convex, superq, growth, h2[0], h2[1], notes)
