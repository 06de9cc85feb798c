"""Travelling-wave candidates sampled on a uniform grid.

A profile is extended by constants beyond its first and last node, so its
derivative has compact support inside the grid. Every transformation returns
a new profile normalized to q(0) = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from periwave.errors import DegenerateInputError, DomainError


@dataclass(frozen=True)
class Grid:
    z_min: float
    h: float
    n: int

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"grid spacing must be positive, got {self.h}")
        if self.n < 3:
            raise DomainError(f"grid needs at least 3 nodes, got {self.n}")

    @classmethod
    def symmetric(cls, half_width: float, h: float) -> "Grid":
        """Grid on [-half_width, half_width] with z = 0 as a node."""
        m = int(round(half_width / h))
        return cls(-m * h, h, 2 * m + 1)

    @property
    def z_max(self) -> float:
        return self.z_min + (self.n - 1) * self.h

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.h * np.arange(self.n)

    def covers(self, lo: float, hi: float) -> bool:
        tol = 1e-9 * self.h
        return self.z_min <= lo + tol and self.z_max >= hi - tol


@dataclass(frozen=True, eq=False)
class Profile:
    """Nodal displacements on a grid.

    A profile built with ``from_slopes`` also keeps its cell slopes exactly;
    slope-based quantities then avoid the cancellation of differencing nearly
    equal values in the flat tails.
    """

    grid: Grid
    values: np.ndarray
    cell_slopes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.cell_slopes is not None:
            s = np.array(self.cell_slopes, dtype=float)
            if s.shape != (self.grid.n - 1,):
                raise DomainError(f"expected {self.grid.n - 1} cell slopes, got shape {s.shape}")
            s.setflags(write=False)
            object.__setattr__(self, "cell_slopes", s)

    @classmethod
    def from_slopes(cls, grid: Grid, slopes) -> "Profile":
        """Profile with the given cell slopes, normalized to q(0) = 0."""
        s = np.asarray(slopes, dtype=float)
        steps = s * grid.h
        # accumulate outward from the node nearest z = 0
        i0 = int(np.clip(round(-grid.z_min / grid.h), 0, grid.n - 1))
        q = np.zeros(grid.n)
        q[i0 + 1 :] = np.cumsum(steps[i0:])
        q[:i0] = -np.cumsum(steps[:i0][::-1])[::-1]
        prof = cls(grid, q, s)
        off = eval_at(prof, 0.0)
        return prof if off == 0 else cls(grid, q - off, s)

    @property
    def has_exact_slopes(self) -> bool:
        return self.cell_slopes is not None

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    @property
    def slopes(self) -> np.ndarray:
        """Cell slopes of the piecewise-linear interpolant (length n - 1)."""
        if self.cell_slopes is not None:
            return self.cell_slopes
        return np.diff(self.values) / self.grid.h

    def with_values(self, values) -> "Profile":
        return Profile(self.grid, values)

    def normalized(self) -> "Profile":
        return Profile(self.grid, self.values - eval_at(self, 0.0), self.cell_slopes)

    def scaled(self, factor: float) -> "Profile":
        s = None if self.cell_slopes is None else factor * self.cell_slopes
        return Profile(self.grid, factor * self.values, s)

    def to_csv(self, path) -> None:
        """Write ``z,q,dq`` rows at full double precision."""
        dq = derivative(self)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "q", "dq"])
            for row in zip(self.z, self.values, dq):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "Profile":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["z", "q", "dq"]:
            raise ValueError(f"{path}: expected header z,q,dq")
        try:
            data = np.array([[float(x) for x in r] for r in rows[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}: malformed row ({exc})") from None
        if data.ndim != 2 or data.shape[1] != 3 or data.shape[0] < 3:
            raise ValueError(f"{path}: expected at least 3 rows of 3 columns")
        z = data[:, 0]
        h = (z[-1] - z[0]) / (len(z) - 1)
        if not np.allclose(np.diff(z), h, rtol=1e-9, atol=1e-12):
            raise ValueError(f"{path}: positions are not uniformly spaced")
        return cls(Grid(float(z[0]), float(h), len(z)), data[:, 1])


def _require_span(grid: Grid, lo: float, hi: float, what: str):
    if not grid.covers(lo, hi):
        raise DomainError(
            f"{what}: grid [{grid.z_min:g}, {grid.z_max:g}] must span [{lo:g}, {hi:g}]"
        )


def piecewise_linear(Lambda: float, L: float, grid: Grid, delta: float = 1.0) -> Profile:
    """Ramp of slope Lambda on [0, L], constant outside."""
    if not L > 0:
        raise DomainError(f"ramp length must be positive, got {L}")
    _require_span(grid, -delta, L + delta, "piecewise_linear")
    q = Lambda * np.clip(grid.z, 0.0, L)
    return Profile(grid, q).normalized()


def tanh_profile(Lambda: float, beta: float, grid: Grid) -> Profile:
    """(Lambda / sqrt(beta)) tanh(beta z); its kinetic energy is 2 Lambda^2 / 3."""
    if not beta > 0:
        raise DomainError(f"steepness must be positive, got {beta}")
    _require_span(grid, -8.0 / beta, 8.0 / beta, "tanh_profile")
    q = Lambda / math.sqrt(beta) * np.tanh(beta * grid.z)
    return Profile(grid, q).normalized()


def eval_at(p: Profile, z):
    """Linear interpolation with constant extension beyond the grid."""
    out = np.interp(z, p.grid.z, p.values)
    return float(out) if np.ndim(out) == 0 else out


def derivative(p: Profile) -> np.ndarray:
    """Nodal slopes: central differences inside, one-sided at the ends."""
    s = p.slopes
    return np.concatenate([[s[0]], 0.5 * (s[:-1] + s[1:]), [s[-1]]])


def monotonize(p: Profile) -> Profile:
    """Replace q by the running integral of |q'|; cell slopes keep their magnitude."""
    if p.has_exact_slopes:
        return Profile.from_slopes(p.grid, np.abs(p.cell_slopes))
    steps = np.abs(np.diff(p.values))
    q = np.concatenate([[0.0], np.cumsum(steps)])
    return Profile(p.grid, q).normalized()


def half_rise_point(p: Profile) -> float:
    """First position where q crosses the midpoint of its end values."""
    v = p.values
    if np.ptp(v) == 0:
        raise DegenerateInputError("cannot recenter a constant profile")
    target = 0.5 * (v[0] + v[-1])
    sign = 1.0 if v[-1] >= v[0] else -1.0
    d = sign * (v - target)
    i = int(np.argmax(d >= 0))
    if i == 0:
        return float(p.grid.z[0])
    a, b = d[i - 1], d[i]
    frac = 0.0 if b == a else -a / (b - a)
    return float(p.grid.z[i - 1] + frac * p.grid.h)


def shift(p: Profile, offset: float, snap: bool = False) -> Profile:
    """Profile r with r(z) = p(z + offset), renormalized.

    With ``snap`` the offset is rounded to whole cells and the shift is exact
    (nodal values are moved, no interpolation).
    """
    if snap:
        k = int(round(offset / p.grid.h))
        if p.has_exact_slopes:
            return Profile.from_slopes(p.grid, shift_cells(p.cell_slopes, k))
        v = p.values
        if k > 0:
            out = np.concatenate([v[k:], np.full(k, v[-1])])
        elif k < 0:
            out = np.concatenate([np.full(-k, v[0]), v[:k]])
        else:
            out = v.copy()
        return Profile(p.grid, out).normalized()
    return Profile(p.grid, eval_at(p, p.grid.z + offset)).normalized()


def shift_cells(s, k: int):
    """Move a cell array by k cells (s_new[i] = s[i + k]), repeating the edge cell."""
    if k > 0:
        return np.concatenate([s[k:], np.full(k, s[-1])])
    if k < 0:
        return np.concatenate([np.full(-k, s[0]), s[:k]])
    return np.array(s, copy=True)


def recenter(p: Profile, snap: bool = False) -> Profile:
    """Translate so the half-rise point sits at z = 0, then renormalize."""
    return shift(p, half_rise_point(p), snap=snap)


def bond_strain_sup(p: Profile, pot, ell: float, n_xi: int = 32) -> float:
    """sup over nodes x and Gauss nodes xi in [ell, delta] of |q(x+xi) - q(x)| / m(xi)."""
    if not 0 < ell < pot.delta:
        raise DomainError(f"cutoff must satisfy 0 < ell < delta, got {ell}")
    t, _ = np.polynomial.legendre.leggauss(n_xi)
    xi = 0.5 * (pot.delta - ell) * (t + 1) + ell
    z = p.grid.z
    diff = eval_at(p, z[:, None] + xi[None, :]) - p.values[:, None]
    return float(np.max(np.abs(diff / pot.m(xi)[None, :])))
