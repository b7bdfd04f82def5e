"""Decay-rate spectrum and radial profiles for a uniform conducting sphere.

Free decay of eddy currents is governed by the eigenproblem

    curl( (1/mu) curl a ) = sigma lambda a,

restricted here to the family a = f(r) X_lm excited by scalar-potential
illumination of a sphere.  Inside the target f solves the spherical Bessel
equation, f = j_l(x r/a) with lambda = D_c x^2 / a^2; outside, the
insulating exterior forces f proportional to (a/r)^(l+1).  Matching
tangential E (f continuous) and tangential H ((1/mu) d(r f)/dr continuous)
yields the transcendental eigencondition

    x j_(l-1)(x) = l (1 - mu_c/mu_b) j_l(x),

whose roots x_n are the dimensionless mode wavenumbers.  A second-order
radial finite-difference eigensolver provides an independent check of this
derivation (`radial_fd_decay_rates`).

Modes are normalized against the weight mu_0 sigma, i.e.

    mu_0 sigma_c int_0^a f_n(r)^2 r^2 dr = 1,

so that excitation amplitudes carry a bare mu_0 and the receiver-voltage
formula needs no further constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import MU_0, MaterialSpec, ParameterError, TargetSpec, diffusivity
from .special import (
    _refine_roots,
    spherical_bessel_j,
    spherical_bessel_j_derivative,
    spherical_bessel_j_zeros,
)


class TruncationError(RuntimeError):
    """Requested mode range exceeds the configured wavenumber window."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge."""


@dataclass(frozen=True)
class Mode:
    """One decay eigenmode of the sphere.

    ``x`` is the dimensionless wavenumber (k a), ``decay_rate_per_s`` equals
    D_c x^2 / a^2 and ``norm`` is the radial normalization constant N in
    f(r) = N j_l(x r/a).
    """

    l: int
    m: int
    n: int
    x: float
    decay_rate_per_s: float
    norm: float
    radius_m: float

    def __post_init__(self):
        if self.l < 1 or abs(self.m) > self.l or self.n < 1:
            raise ParameterError("mode requires l >= 1, |m| <= l, n >= 1")
        if self.x <= 0 or self.decay_rate_per_s <= 0:
            raise ParameterError("mode wavenumber and rate must be > 0")


@dataclass(frozen=True)
class ModeLibrary:
    """Immutable, rate-ordered collection of modes for one target."""

    target: TargetSpec
    background_mu_r: float
    modes: tuple
    max_l: int
    max_n: int

    def __post_init__(self):
        rates = [m.decay_rate_per_s for m in self.modes]
        if any(b < a for a, b in zip(rates, rates[1:])):
            raise ParameterError("mode library must be sorted by decay rate")

    def sector(self, l: int) -> list:
        return [m for m in self.modes if m.l == l]

    @property
    def rates(self) -> np.ndarray:
        return np.array([m.decay_rate_per_s for m in self.modes])

    def to_dict(self) -> dict:
        mat = self.target.material
        return {
            "target": {
                "radius_m": self.target.radius_m,
                "conductivity_s_per_m": mat.conductivity_s_per_m,
                "mu_r": mat.relative_permeability,
            },
            "background_mu_r": self.background_mu_r,
            "max_l": self.max_l,
            "max_n": self.max_n,
            "modes": [
                {
                    "l": m.l,
                    "m": m.m,
                    "n": m.n,
                    "x": m.x,
                    "lambda_per_s": m.decay_rate_per_s,
                    "norm": m.norm,
                }
                for m in self.modes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModeLibrary":
        tgt = TargetSpec(
            radius_m=data["target"]["radius_m"],
            material=MaterialSpec(
                conductivity_s_per_m=data["target"]["conductivity_s_per_m"],
                relative_permeability=data["target"]["mu_r"],
            ),
        )
        modes = tuple(
            Mode(
                l=m["l"],
                m=m["m"],
                n=m["n"],
                x=m["x"],
                decay_rate_per_s=m["lambda_per_s"],
                norm=m["norm"],
                radius_m=tgt.radius_m,
            )
            for m in data["modes"]
        )
        return cls(
            target=tgt,
            background_mu_r=data["background_mu_r"],
            modes=modes,
            max_l=data["max_l"],
            max_n=data["max_n"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ModeLibrary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def eigencondition(l: int, x, mu_ratio: float):
    """Residual of the sphere eigencondition; zeros are mode wavenumbers."""
    if l < 1:
        raise ParameterError("sector degree l must be >= 1")
    xa = np.asarray(x, dtype=float)
    return xa * spherical_bessel_j(l - 1, xa) - l * (1.0 - mu_ratio) * spherical_bessel_j(l, xa)


def eigencondition_derivative(l: int, x, mu_ratio: float):
    xa = np.asarray(x, dtype=float)
    return (
        spherical_bessel_j(l - 1, xa)
        + xa * spherical_bessel_j_derivative(l - 1, xa)
        - l * (1.0 - mu_ratio) * spherical_bessel_j_derivative(l, xa)
    )


def _sector_wavenumbers(l: int, mu_ratio: float, count: int, x_max: float | None):
    """First ``count`` eigen-wavenumbers of sector l.

    Brackets come from the merged zeros of j_(l-1) and j_l: on each open
    subinterval both Bessel terms keep a fixed sign, so a sign change of the
    residual at the endpoints brackets exactly one root and none are missed.
    """
    extra = count + 2
    if mu_ratio == 1.0:
        # the condition reduces to x j_(l-1)(x) = 0
        roots = spherical_bessel_j_zeros(l - 1, count) if l > 1 else np.arange(
            1, count + 1
        ) * np.pi
    else:
        za = spherical_bessel_j_zeros(l - 1, extra) if l > 1 else np.arange(
            1, extra + 1
        ) * np.pi
        zb = spherical_bessel_j_zeros(l, extra)
        pts = np.sort(np.concatenate([[1e-9], za, zb]))
        res = eigencondition(l, pts, mu_ratio)
        sign = np.sign(res)
        flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        lo, hi = pts[flips], pts[flips + 1]
        roots = _refine_roots(
            lambda x: eigencondition(l, x, mu_ratio),
            lambda x: eigencondition_derivative(l, x, mu_ratio),
            lo,
            hi,
        )
        roots = np.sort(roots)
        roots = roots[roots > 1e-8][:count]
    if roots.size < count:
        raise NumericalError(f"found only {roots.size} of {count} roots for l={l}")
    if x_max is not None and roots[-1] > x_max:
        raise TruncationError(
            f"root {roots[-1]:.3f} exceeds configured x_max={x_max:.3f} for l={l}"
        )
    scale = 1.0 + abs(l * (1.0 - mu_ratio)) / np.maximum(roots, 1.0)
    bad = np.abs(eigencondition(l, roots, mu_ratio)) > 1e-12 * scale
    if np.any(bad):
        raise NumericalError("eigencondition residual above 1e-12 after polishing")
    return roots


def normalization_constant(target: TargetSpec, l: int, x: float) -> float:
    """Radial normalization N with mu_0 sigma_c N^2 a^3 J(x) = 1.

    J(x) = int_0^1 j_l(x u)^2 u^2 du = [j_l(x)^2 - j_(l-1)(x) j_(l+1)(x)] / 2
    (Lommel closed form, valid for every x).
    """
    jl = spherical_bessel_j(l, x)
    jm = spherical_bessel_j(l - 1, x)
    jp = spherical_bessel_j(l + 1, x)
    radial = 0.5 * (jl * jl - jm * jp)
    sigma = target.material.conductivity_s_per_m
    return 1.0 / np.sqrt(MU_0 * sigma * target.radius_m**3 * radial)


def find_decay_rates(
    target: TargetSpec,
    background_mu_r: float,
    l: int,
    count: int,
    x_max: float | None = None,
) -> list:
    """First ``count`` normalized modes of sector l, ascending decay rate."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    mu_ratio = target.material.relative_permeability / background_mu_r
    xs = _sector_wavenumbers(l, mu_ratio, count, x_max)
    d_c = diffusivity(target.material)
    a = target.radius_m
    return [
        Mode(
            l=l,
            m=0,
            n=i + 1,
            x=float(x),
            decay_rate_per_s=float(d_c * x * x / (a * a)),
            norm=float(normalization_constant(target, l, x)),
            radius_m=a,
        )
        for i, x in enumerate(xs)
    ]


def normalize_mode(mode: Mode, target: TargetSpec) -> Mode:
    """Return the mode with its normalization constant recomputed."""
    return replace(mode, norm=float(normalization_constant(target, mode.l, mode.x)))


def radial_profile(mode: Mode, r) -> np.ndarray | float:
    """Radial mode profile f(r) = N j_l(x r/a), continued as (a/r)^(l+1) outside."""
    ra = np.asarray(r, dtype=float)
    scalar = ra.ndim == 0
    ra = np.atleast_1d(ra)
    a, x, l = mode.radius_m, mode.x, mode.l
    out = np.empty_like(ra)
    inside = ra <= a
    out[inside] = spherical_bessel_j(l, x * ra[inside] / a)
    surface = spherical_bessel_j(l, x)
    out[~inside] = surface * (a / ra[~inside]) ** (l + 1)
    out *= mode.norm
    return float(out[0]) if scalar else out


def radial_fd_decay_rates(
    target: TargetSpec,
    background_mu_r: float,
    l: int,
    grid_points: int,
    count: int = 10,
) -> np.ndarray:
    """Decay rates from a brute-force radial finite-difference eigensolver.

    Discretizes u = r f, with -u'' + l(l+1)/r^2 u = (lambda/D_c) u on (0, a),
    u(0) = 0 and the exterior-matching Robin row u'(a) + (l mu_ratio / a)
    u(a) = 0, on a uniform grid (second order).  The boundary row is scaled
    by 1/2 so the generalized problem stays symmetric definite, then folded
    into a standard symmetric tridiagonal problem.  This solver shares no
    code with the eigencondition path and exists to validate it.
    """
    if grid_points < 100:
        raise ParameterError("grid_points must be >= 100")
    if count > grid_points // 4:
        raise ParameterError("count too large for the grid")
    mu_ratio = target.material.relative_permeability / background_mu_r
    a = target.radius_m
    h = a / grid_points
    r = np.arange(1, grid_points + 1) * h
    diag = np.full(grid_points, 2.0 / h**2) + l * (l + 1) / r**2
    off = np.full(grid_points - 1, -1.0 / h**2)
    diag[-1] = 1.0 / h**2 + l * mu_ratio / (a * h) + l * (l + 1) / (2.0 * a**2)
    # mass matrix diag(1, ..., 1, 1/2); fold in via symmetric scaling
    s_last = np.sqrt(2.0)
    diag[-1] *= 2.0
    off[-1] *= s_last
    try:
        k2 = eigh_tridiagonal(
            diag, off, select="i", select_range=(0, count - 1), eigvals_only=True
        )
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError("tridiagonal eigensolver failed") from exc
    d_c = diffusivity(target.material)
    return d_c * np.sort(k2)


def build_mode_library(
    target: TargetSpec,
    background_mu_r: float,
    max_l: int,
    count_per_l: int,
) -> ModeLibrary:
    """Modes for all sectors l = 1..max_l, globally sorted by decay rate.

    The m degeneracy of the sphere is exact; modes are stored once with
    m = 0 and reconstructed per m by the excitation machinery as needed.
    """
    modes = []
    for l in range(1, max_l + 1):
        modes.extend(find_decay_rates(target, background_mu_r, l, count_per_l))
    modes.sort(key=lambda m: (m.decay_rate_per_s, m.l, m.n))
    return ModeLibrary(
        target=target,
        background_mu_r=background_mu_r,
        modes=tuple(modes),
        max_l=max_l,
        max_n=count_per_l,
    )
