"""Transmitter pulses, coil coupling integrals and mode-sum voltages.

The free-decay vector potential is a superposition over normalized modes,

    A(x, t) = sum_n A_n a_n(x) exp(-lambda_n (t - t0)),

with excitation amplitudes fixed by the transmitter current history and the
line integral of the mode profile along the (idealized 1-D) transmitter
curve:

    A_n = mu_0 I_n oint_T conj(a_n) . dl,
    I_n = int_-inf^t0 I0(t') exp(-lambda_n (t0 - t')) dt'.

The receiver voltage follows as V(t) = sum_n V_n exp(-lambda_n (t - t0))
with V_n = lambda_n N_R A_n oint_R a_n . dl.  With the mu_0-sigma mode
normalization these formulas carry no further constants.

Sign convention: voltage is positive for decreasing secondary flux through
the receiver loop oriented along +phi; for coincident transmitter/receiver
loops and step-off drive every V_n is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc as _erfc

from .core import MU_0, ParameterError, TargetSpec, diffusivity
from .modes import Mode, ModeLibrary
from .special import spherical_bessel_j, spherical_harmonic_dtheta, vector_spherical_harmonic


@dataclass(frozen=True)
class PulseWaveform:
    """Transmitter current history ending at ``t0_s``.

    ``ramp`` selects the termination model: "step" (instantaneous shutoff
    from the dc level), "linear" (linear ramp to zero over ``tau_r_s``) or
    "table" (piecewise-linear samples of the current, last knot at t0).
    The effective loop current is base_current_a * windings.
    """

    base_current_a: float
    windings: int = 1
    ramp: str = "step"
    tau_r_s: float = 0.0
    t0_s: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.ramp not in ("step", "linear", "table"):
            raise ParameterError(f"unknown ramp model {self.ramp!r}")
        if self.ramp == "linear" and self.tau_r_s <= 0:
            raise ParameterError("linear ramp requires tau_r > 0")
        if self.ramp == "table":
            ts = [t for t, _ in self.table]
            if len(ts) < 2 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ParameterError("table must have >= 2 strictly increasing knots")
        if self.windings < 1:
            raise ParameterError("windings must be >= 1")

    @property
    def effective_current_a(self) -> float:
        return self.base_current_a * self.windings


@dataclass(frozen=True)
class Loop:
    """Idealized coil: circular coaxial with the target z-axis, or polygonal.

    Circular loops lie in a horizontal plane at ``height_m`` with the given
    ``radius_m`` and carry current in +phi for positive drive.  Polygonal
    loops are closed vertex lists (n, 3) in meters.  ``windings`` counts
    receiver turns N_R; transmitter turns belong to the pulse.
    """

    kind: str = "circular"
    radius_m: float = 0.0
    height_m: float = 0.0
    windings: int = 1
    vertices: tuple = ()

    def __post_init__(self):
        if self.kind == "circular":
            if self.radius_m <= 0:
                raise ParameterError("circular loop needs radius > 0")
        elif self.kind == "polygon":
            if len(self.vertices) < 3:
                raise ParameterError("polygon loop needs >= 3 vertices")
        else:
            raise ParameterError(f"unknown loop kind {self.kind!r}")
        if self.windings < 1:
            raise ParameterError("windings must be >= 1")

    def min_distance_m(self) -> float:
        if self.kind == "circular":
            return float(np.hypot(self.radius_m, self.height_m))
        v = np.asarray(self.vertices, dtype=float)
        seg = np.roll(v, -1, axis=0) - v
        t = np.linspace(0.0, 1.0, 33)
        pts = v[:, None, :] + seg[:, None, :] * t[None, :, None]
        return float(np.min(np.linalg.norm(pts.reshape(-1, 3), axis=1)))


@dataclass(frozen=True)
class UniformField:
    """Uniform axial illumination H0 z-hat, as a transmitter stand-in."""

    amplitude_a_per_m: float = 1.0


@dataclass
class TimeSeries:
    """Sampled signal: strictly increasing gate times and finite values."""

    times_s: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times_s = np.asarray(self.times_s, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times_s.shape != self.values.shape:
            raise ParameterError("times and values must have equal shape")
        if np.any(np.diff(self.times_s) <= 0):
            raise ParameterError("gate times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("values must be finite")


@dataclass(frozen=True)
class ExcitationCoefficients:
    """Per-mode pulse integrals I_n, amplitudes A_n and voltages V_n."""

    pulse_integrals: np.ndarray
    amplitudes: np.ndarray
    voltages: np.ndarray


def pulse_history_integral(pulse: PulseWaveform, rate_per_s: float) -> float:
    """Exponentially weighted history integral I_n for one decay rate."""
    if rate_per_s <= 0:
        raise ParameterError("decay rate must be > 0")
    i0 = pulse.effective_current_a
    lam = rate_per_s
    if pulse.ramp == "step":
        return i0 / lam
    if pulse.ramp == "linear":
        u = lam * pulse.tau_r_s
        # (1 - e^-u)/u / lam, stable for small u
        return i0 * (-np.expm1(-u)) / (pulse.tau_r_s * lam * lam)
    # piecewise-linear table; constant current before the first knot
    t0 = pulse.t0_s
    knots = np.asarray([[t, i * pulse.windings] for t, i in pulse.table], dtype=float)
    total = knots[0, 1] * np.exp(-lam * (t0 - knots[0, 0])) / lam
    for (t1, i1), (t2, i2) in zip(knots[:-1], knots[1:]):
        slope = (i2 - i1) / (t2 - t1)
        ua, ub = t0 - t1, t0 - t2  # ua > ub >= 0
        c0 = i1 + slope * (t0 - t1)
        # int (c0 - slope*u) e^{-lam u} du over [ub, ua]
        e_a, e_b = np.exp(-lam * ua), np.exp(-lam * ub)
        total += c0 * (e_b - e_a) / lam
        total -= slope * ((ub / lam + 1 / lam**2) * e_b - (ua / lam + 1 / lam**2) * e_a)
    return float(total)


# ---------------------------------------------------------------------------
# line integrals of exterior multipole fields


def _polygon_quadrature(loop: Loop, order: int = 16):
    v = np.asarray(loop.vertices, dtype=float)
    seg = np.roll(v, -1, axis=0) - v
    nodes, wts = leggauss(order)
    t = 0.5 * (nodes + 1.0)
    pts = (v[:, None, :] + seg[:, None, :] * t[None, :, None]).reshape(-1, 3)
    # dl element per node: segment vector times half the Gauss weight
    tangents = (seg[:, None, :] * (0.5 * wts)[None, :, None]).reshape(-1, 3)
    return pts, tangents


def exterior_multipole_line_integral(
    l: int, m: int, loop: Loop, radius_m: float, order: int = 16
) -> complex:
    """Line integral oint (a/r)^(l+1) X_lm . dl along the loop, in meters.

    Circular coaxial loops are azimuthally symmetric, so only m = 0
    contributes and the phi integral is analytic.  Polygonal loops use
    Gauss-Legendre quadrature per segment.  Loops touching the target are
    rejected.
    """
    a = radius_m
    if loop.min_distance_m() <= a:
        raise ParameterError("loop intersects the target sphere")
    if loop.kind == "circular":
        if m != 0:
            return 0.0 + 0.0j
        r = np.hypot(loop.radius_m, loop.height_m)
        theta = np.arctan2(loop.radius_m, loop.height_m)
        xphi = -1j * spherical_harmonic_dtheta(l, 0, theta, 0.0) / np.sqrt(l * (l + 1.0))
        return complex(2.0 * np.pi * loop.radius_m * (a / r) ** (l + 1) * xphi)
    pts, tangents = _polygon_quadrature(loop, order)
    r = np.linalg.norm(pts, axis=1)
    theta = np.arccos(np.clip(pts[:, 2] / r, -1.0, 1.0))
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    x = vector_spherical_harmonic(l, m, theta, phi)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    sin_p, cos_p = np.sin(phi), np.cos(phi)
    e_theta = np.stack([cos_t * cos_p, cos_t * sin_p, -sin_t], axis=1)
    e_phi = np.stack([-sin_p, cos_p, np.zeros_like(phi)], axis=1)
    vec = x[1][:, None] * e_theta + x[2][:, None] * e_phi
    field_dot_dl = np.einsum("ij,ij->i", vec.real, tangents) + 1j * np.einsum(
        "ij,ij->i", vec.imag, tangents
    )
    return complex(np.sum((a / r) ** (l + 1) * field_dot_dl))


def coil_line_integral(mode: Mode, loop: Loop, order: int = 16) -> complex:
    """oint a_n . dl of the exterior mode profile along one loop winding."""
    geom = exterior_multipole_line_integral(mode.l, mode.m, loop, mode.radius_m, order)
    return mode.norm * spherical_bessel_j(mode.l, mode.x) * geom


def _uniform_field_amplitude(mode: Mode, target: TargetSpec, mu_b: float, h0: float) -> complex:
    """Static-projection amplitude for uniform axial illumination, l = 1.

    Step-off from a dc uniform field H0 z-hat: the amplitude is the
    mu_0-sigma projection of the static interior vector potential
    A_phi = (B_in/2) r sin(theta) onto the mode, with B_in the uniform
    interior flux density of the magnetized sphere.  The projection is real
    against the real azimuthal basis i X_10; the leading i restores the
    X_lm phase convention shared with the line integrals.
    """
    if mode.l != 1 or mode.m != 0:
        return 0.0 + 0.0j
    mu_c = target.material.relative_permeability
    h_in = 3.0 * mu_b * h0 / (mu_c + 2.0 * mu_b)
    b_in = MU_0 * mu_c * h_in
    sigma = target.material.conductivity_s_per_m
    a = target.radius_m
    radial = spherical_bessel_j(2, mode.x) / mode.x  # int_0^1 j_1(x u) u^3 du
    w_proj = -MU_0 * sigma * mode.norm * (b_in / 2.0) * np.sqrt(8.0 * np.pi / 3.0) * a**4 * radial
    return 1j * w_proj


def excitation_amplitude(mode: Mode, pulse: PulseWaveform, tx, target: TargetSpec | None = None, background_mu_r: float = 1.0) -> complex:
    """Excitation amplitude A_n for one mode.

    For a transmitter loop: A_n = mu_0 I_n conj(oint a_n . dl).  For a
    uniform-field source the equivalent static projection is used, scaled
    by lambda_n I_n / I0 so that ramped terminations are honored (the
    factor is 1 for step-off).
    """
    i_n = pulse_history_integral(pulse, mode.decay_rate_per_s)
    if isinstance(tx, UniformField):
        if target is None:
            raise ParameterError("uniform-field excitation needs the target spec")
        beta = _uniform_field_amplitude(mode, target, background_mu_r, tx.amplitude_a_per_m)
        return beta * mode.decay_rate_per_s * i_n / pulse.effective_current_a
    return MU_0 * i_n * np.conj(coil_line_integral(mode, tx))


def voltage_coefficient(mode: Mode, amplitude: complex, rx: Loop) -> float:
    """Receiver-voltage coefficient V_n = lambda_n N_R A_n oint a_n . dl."""
    val = mode.decay_rate_per_s * rx.windings * amplitude * coil_line_integral(mode, rx)
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1e-300):
        raise ParameterError(
            "complex voltage coefficient: sum conjugate +/-m mode pairs instead"
        )
    return float(val.real)


def compute_excitation(
    library: ModeLibrary, pulse: PulseWaveform, tx, rx: Loop
) -> ExcitationCoefficients:
    """Pulse integrals, amplitudes and voltage coefficients for a library.

    The stored modes carry the exact m degeneracy of the sphere implicitly;
    for each (l, n) the voltage sums the transmitter/receiver coupling over
    all m.  For coaxial circular loops only m = 0 survives.
    """
    if not library.modes:
        raise ParameterError("mode library is empty")
    uniform = isinstance(tx, UniformField)
    geom: dict = {}

    def geometry_sum(l: int) -> float:
        if l not in geom:
            if uniform:
                geom[l] = None
            else:
                total = 0.0
                for m in range(-l, l + 1):
                    lt = exterior_multipole_line_integral(l, m, tx, library.target.radius_m)
                    lr = exterior_multipole_line_integral(l, m, rx, library.target.radius_m)
                    total += (np.conj(lt) * lr).real
                geom[l] = total
        return geom[l]

    i_n = np.array([pulse_history_integral(pulse, m.decay_rate_per_s) for m in library.modes])
    a_n = np.empty(len(library.modes), dtype=complex)
    v_n = np.empty(len(library.modes))
    for k, mode in enumerate(library.modes):
        if uniform:
            a_n[k] = excitation_amplitude(
                mode, pulse, tx, library.target, library.background_mu_r
            )
            v_n[k] = voltage_coefficient(mode, a_n[k], rx)
        else:
            a_n[k] = excitation_amplitude(mode, pulse, tx)
            shape = mode.norm * spherical_bessel_j(mode.l, mode.x)
            v_n[k] = (
                mode.decay_rate_per_s
                * rx.windings
                * MU_0
                * i_n[k]
                * shape
                * shape
                * geometry_sum(mode.l)
            )
    return ExcitationCoefficients(pulse_integrals=i_n, amplitudes=a_n, voltages=v_n)


def synthesize_voltage(
    library: ModeLibrary, coeffs: ExcitationCoefficients, gates_s
) -> TimeSeries:
    """Mode-sum receiver voltage V(t) = sum V_n exp(-lambda_n (t - t0)).

    Gate times are absolute; all must lie beyond t0 (here t0 = 0 unless the
    caller shifted gates).  Metadata carries a per-gate truncation bound for
    the omitted spectral tail.
    """
    if not library.modes:
        raise ParameterError("mode library is empty")
    t = np.asarray(gates_s, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("gates must lie after pulse termination (t > t0)")
    rates = library.rates
    vals = np.exp(-np.outer(t, rates)) @ coeffs.voltages
    bound = truncation_bound(library, coeffs, t)
    return TimeSeries(
        times_s=t,
        values=vals,
        metadata={"truncation_bound": bound, "kind": "mode_sum"},
    )


def truncation_bound(library: ModeLibrary, coeffs: ExcitationCoefficients, t) -> np.ndarray:
    """Upper bound on the omitted spectral tail at each gate.

    Models the tail as coefficients bounded by the trend of the retained
    ones, with the asymptotic root density of one mode per pi in x; a
    factor-2 margin covers pre-asymptotic spacing and coefficient growth.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = library.target.radius_m
    d_c = diffusivity(library.target.material)
    tau_c = a * a / d_c
    out = np.zeros_like(t)
    for l in sorted({m.l for m in library.modes}):
        idx = [k for k, m in enumerate(library.modes) if m.l == l]
        sector = [library.modes[k] for k in idx]
        vbar = np.max(np.abs(coeffs.voltages[idx][-max(1, len(idx) // 4):]))
        x_max = max(m.x for m in sector)
        u = x_max * np.sqrt(t / tau_c)
        out += 2.0 * vbar * np.sqrt(np.pi) * _erfc(u) / (2.0 * np.pi * np.sqrt(t / tau_c))
    return out
