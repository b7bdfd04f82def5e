"""Post-quench surface currents and the early-time t^(-1/2) response.

The theory proceeds in three steps after transmitter shutoff.  First, once
the outgoing transient has left the target region (t_tr = t0 + tau_tr), the
interior field is still frozen at its pre-quench static configuration while
the exterior has relaxed to a source-free magnetostatic potential; the
mismatch of tangential H across the boundary is carried by a surface
current K.  Second, K relaxes diffusively into the target: near the
surface the problem is one-dimensional in the depth coordinate z <= 0 with
a Neumann condition at z = 0.  Third, the normal flux change at the
boundary feeds an exterior potential correction whose time derivative gives
the receiver voltage, proportional to (t - t_tr)^(-1/2) for every harmonic.

Everything here is computed per (l, m) in dimensionless internal units
(lengths in a, times in a^2/D_c, fields in H_0, mu_0 = 1); permeabilities
enter only as the relative values mu_c, mu_b.  SI conversion happens at the
interface operations via :class:`~temsphere.core.ScaleSystem`.

Sign conventions follow Lenz's law: the post-quench surface current
maintains the trapped interior flux, and the exterior moment decays, so
the coincident-loop voltage is positive.  (The interior sheet correction is
Delta_A = -mu_c K W with W > 0; the exterior potential correction per unit
interior amplitude is +phi_l (a/r)^(l+1) Y_lm with phi_l > 0.)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ParameterError, ScaleSystem, TargetSpec, TimeMarkers, scales_for
from .excitation import Loop, TimeSeries, UniformField, exterior_multipole_line_integral
from .special import (
    AngularGrid,
    angular_grid,
    erfc,
    project_tangential,
    spherical_harmonic,
    spherical_harmonic_dtheta,
    vector_spherical_harmonic,
)


@dataclass
class PotentialExpansion:
    """Spherical-harmonic expansion of a magnetic scalar potential.

    Per (l, m): ``interior`` holds the coefficient of (r/a)^l Y_lm inside
    the target, ``growing`` the source coefficient of (r/a)^l Y_lm outside,
    ``decaying`` the induced coefficient of (a/r)^(l+1) Y_lm outside.
    Coefficients are dimensionless (potential scale H_0 a).
    """

    interior: dict = field(default_factory=dict)
    growing: dict = field(default_factory=dict)
    decaying: dict = field(default_factory=dict)

    def harmonics(self) -> list:
        keys = set(self.interior) | set(self.growing) | set(self.decaying)
        return sorted(keys)


@dataclass
class SurfaceScalarSpectrum:
    """Y_lm coefficients of a scalar field on the target surface."""

    coeffs: dict = field(default_factory=dict)


@dataclass
class SurfaceCurrentSpectrum:
    """X_lm coefficients of the tangential surface current sheet (units H_0)."""

    coeffs: dict = field(default_factory=dict)


@dataclass
class EarlyTimeField:
    """Exterior field correction triple at given points and elapsed time.

    Vectors are complex spherical components (r, theta, phi), summed over
    the retained harmonics; physically real scenarios leave a negligible
    imaginary part.  ``in_window`` records whether the elapsed time lies in
    the validity window (well past the transient, well before tau_c).
    """

    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    elapsed: float
    dA: np.ndarray
    dB: np.ndarray
    dE: np.ndarray
    window: tuple
    in_window: bool


@dataclass(frozen=True)
class EarlySignal:
    """Early-time receiver signal V(t) = amplitude / sqrt(t - t_ref).

    ``amplitude_v_sqrt_s`` is the SI power-law amplitude (V sqrt(s));
    ``per_harmonic`` maps (l, m) to its contribution.
    """

    amplitude_v_sqrt_s: float
    t_ref_s: float
    window_s: tuple
    per_harmonic: dict

    def evaluate(self, times_s) -> np.ndarray:
        t = np.asarray(times_s, dtype=float)
        if np.any(t <= self.t_ref_s):
            raise ParameterError("early-time signal needs t > t_ref")
        return self.amplitude_v_sqrt_s / np.sqrt(t - self.t_ref_s)


# ---------------------------------------------------------------------------
# Step 0: illumination and the pre-quench static solution


def _loop_axis_coefficients(loop: Loop, current_a: float, radius_m: float, max_l: int):
    """Interior potential coefficients d_l of a coaxial circular loop.

    From the Legendre expansion of the loop's on-axis solid angle: per
    degree l the coefficient of (r/a)^l Y_l0 is

        d_l = I sin(alpha) P_l^1(cos(alpha)) (a/s)^l sqrt(4 pi/(2l+1)) / (2 l),

    with (s, alpha) the spherical position of the ring.
    """
    s = float(np.hypot(loop.radius_m, loop.height_m))
    alpha = float(np.arctan2(loop.radius_m, loop.height_m))
    out = {}
    for l in range(1, max_l + 1):
        # P_l^1(cos a) = dY_l0/dtheta / sqrt((2l+1)/4pi)
        pl1 = float(
            np.real(spherical_harmonic_dtheta(l, 0, alpha, 0.0))
        ) / np.sqrt((2 * l + 1) / (4.0 * np.pi))
        d = (
            current_a
            * np.sin(alpha)
            * pl1
            * (radius_m / s) ** l
            * np.sqrt(4.0 * np.pi / (2 * l + 1))
            / (2.0 * l)
        )
        out[(l, 0)] = complex(d)
    return out


def _segment_h_field(vertices, current_a: float, points: np.ndarray) -> np.ndarray:
    """Biot-Savart H field of a closed polygon at the given points (SI)."""
    v = np.asarray(vertices, dtype=float)
    h = np.zeros_like(points)
    for p1, p2 in zip(v, np.roll(v, -1, axis=0)):
        u = p2 - p1
        w1 = points - p1
        w2 = points - p2
        cross = np.cross(u[None, :], w1)
        denom = np.einsum("ij,ij->i", cross, cross)
        f = np.einsum("j,ij->i", u, w1) / np.linalg.norm(w1, axis=1) - np.einsum(
            "j,ij->i", u, w2
        ) / np.linalg.norm(w2, axis=1)
        h += cross * (f / denom)[:, None]
    return current_a / (4.0 * np.pi) * h


def illumination_coefficients(
    source,
    target: TargetSpec,
    max_l: int,
    scales: ScaleSystem | None = None,
    source_current_a: float = 1.0,
    grid: AngularGrid | None = None,
) -> PotentialExpansion:
    """Expansion of the transmitter's static potential about the target center.

    ``source`` may be a UniformField, a coaxial circular Loop or a polygonal
    Loop (expanded by projecting the Biot-Savart normal field on the target
    surface).  Coefficients are internal (per H_0 a); ``scales`` defaults to
    the target's own scale system with H_0 = 1 A/m.
    """
    if scales is None:
        scales = scales_for(target)
    pot_scale = scales.factor("potential")
    exp = PotentialExpansion()
    if isinstance(source, UniformField):
        d1 = -source.amplitude_a_per_m * target.radius_m * np.sqrt(4.0 * np.pi / 3.0)
        exp.growing[(1, 0)] = complex(d1 / pot_scale)
        return exp
    if not isinstance(source, Loop):
        raise ParameterError("source must be a UniformField or a Loop")
    if source.min_distance_m() <= target.radius_m:
        raise ParameterError("transmitter loop intersects the target sphere")
    if source.kind == "circular":
        raw = _loop_axis_coefficients(source, source_current_a, target.radius_m, max_l)
        exp.growing = {lm: c / pot_scale for lm, c in raw.items()}
        return exp
    # polygonal: project n.H on the target surface; H_r = -dPhi/dr gives
    # d_lm = -(a/l) <Y_lm, H_r> at r = a
    if grid is None:
        grid = angular_grid(max(2 * max_l + 8, 24), max(2 * max_l + 8, 32))
    a = target.radius_m
    pts = a * np.stack(
        [
            np.sin(grid.theta) * np.cos(grid.phi),
            np.sin(grid.theta) * np.sin(grid.phi),
            np.cos(grid.theta),
        ],
        axis=1,
    )
    hvec = _segment_h_field(source.vertices, source_current_a, pts)
    rhat = pts / a
    hr = np.einsum("ij,ij->i", hvec, rhat)
    for l in range(1, max_l + 1):
        for m in range(-l, l + 1):
            y = spherical_harmonic(l, m, grid.theta, grid.phi)
            coeff = np.sum(grid.weights * np.conj(y) * hr)
            exp.growing[(l, m)] = complex(-(a / l) * coeff / pot_scale)
    return exp


def static_sphere_response(
    illumination: PotentialExpansion, mu_c: float, mu_b: float
) -> PotentialExpansion:
    """Pre-quench magnetostatic solution with the permeable sphere present.

    Per unit source coefficient d: interior amplitude is
    d (2l+1) mu_b / (l mu_c + (l+1) mu_b), and the induced decaying
    amplitude is the interior amplitude times (1 - mu_c/mu_b) l/(2l+1).
    The permeability contrast vanishes for mu_c = mu_b and the induced
    static moment with it.
    """
    out = PotentialExpansion(growing=dict(illumination.growing))
    for (l, m), d in illumination.growing.items():
        b_in = d * (2 * l + 1) * mu_b / (l * mu_c + (l + 1) * mu_b)
        out.interior[(l, m)] = b_in
        out.decaying[(l, m)] = b_in * (1.0 - mu_c / mu_b) * l / (2 * l + 1)
    return out


# ---------------------------------------------------------------------------
# Step 1: post-quench exterior potential and the surface current


def interior_normal_h(static: PotentialExpansion) -> SurfaceScalarSpectrum:
    """Normal component of the frozen interior H at the surface, per Y_lm.

    With interior potential b_in (r/a)^l Y_lm: n.H_c = -dPhi/dr|_a = -l b_in.
    """
    return SurfaceScalarSpectrum(
        coeffs={lm: -lm[0] * b for lm, b in static.interior.items()}
    )


def solve_exterior_neumann(
    normal_h: SurfaceScalarSpectrum, mu_c: float, mu_b: float
) -> PotentialExpansion:
    """Exterior potential from the flux-continuity Neumann condition.

    Solves -dPhi0/dr|_a = (mu_c/mu_b) n.H_c per harmonic; the sphere's
    Neumann problem is diagonal in Y_lm, giving the decaying coefficient
    c = (mu_c/mu_b) h_lm / (l+1).  Monopole (l = 0) data is rejected: a net
    normal flux cannot be matched by a source-free exterior potential.
    """
    out = PotentialExpansion()
    for (l, m), h in normal_h.coeffs.items():
        if l == 0:
            if abs(h) > 0:
                raise ParameterError("monopole (l=0) normal-flux data is unphysical")
            continue
        out.decaying[(l, m)] = (mu_c / mu_b) * h / (l + 1)
    return out


def surface_current(
    phi0: PotentialExpansion,
    static: PotentialExpansion,
    max_l: int,
    grid: AngularGrid | None = None,
) -> SurfaceCurrentSpectrum:
    """Surface current K = -n x (grad Phi_0 + H_c), projected onto X_lm.

    The tangential mismatch between the relaxed exterior potential and the
    frozen interior field is evaluated pointwise on a quadrature grid and
    expanded in vector harmonics; this spectral path is validated against
    the closed-form coefficient of `surface_current_closed_form`.
    """
    if grid is None:
        grid = angular_grid(max(2 * max_l + 8, 24), max(2 * max_l + 8, 32))
    vth = np.zeros(grid.size, dtype=complex)
    vph = np.zeros(grid.size, dtype=complex)
    for (l, m), c in phi0.decaying.items():
        dy = spherical_harmonic_dtheta(l, m, grid.theta, grid.phi)
        y = spherical_harmonic(l, m, grid.theta, grid.phi)
        vth += c * dy
        if m != 0:
            vph += c * 1j * m * y / np.sin(grid.theta)
    for (l, m), b in static.interior.items():
        dy = spherical_harmonic_dtheta(l, m, grid.theta, grid.phi)
        y = spherical_harmonic(l, m, grid.theta, grid.phi)
        vth -= b * dy
        if m != 0:
            vph -= b * 1j * m * y / np.sin(grid.theta)
    # K = -n x v: (v_theta e_theta + v_phi e_phi) -> K_theta = v_phi, K_phi = -v_theta
    kth, kph = vph, -vth
    coeffs = project_tangential(kth, kph, grid, max_l)
    # drop quadrature noise so absent harmonics stay exactly absent
    top = max((abs(c) for c in coeffs.values()), default=0.0)
    coeffs = {lm: c for lm, c in coeffs.items() if abs(c) > 1e-12 * top}
    return SurfaceCurrentSpectrum(coeffs=coeffs)


def surface_current_closed_form(l: int, mu_c: float, mu_b: float) -> complex:
    """Closed-form X_lm coefficient of K per unit interior amplitude.

    K^lm = (i/a) (1 + l mu_c/((l+1) mu_b)) sqrt(l(l+1)) X_lm; the internal
    unit system has a = 1.
    """
    return 1j * (1.0 + l * mu_c / ((l + 1.0) * mu_b)) * np.sqrt(l * (l + 1.0))


# ---------------------------------------------------------------------------
# Step 2: diffusive relaxation of the sheet into the interior


def _gauss_kernel(depth: np.ndarray, elapsed: float) -> np.ndarray:
    return np.exp(-depth**2 / (4.0 * elapsed)) / np.sqrt(4.0 * np.pi * elapsed)


def interior_electric_field(
    current: SurfaceCurrentSpectrum, depth, elapsed: float, mu_c: float
) -> dict:
    """Tangential interior E of the diffusing sheet, per harmonic.

    E = (2 K / sigma_c) G(z, t - t_tr) with the half-space Neumann heat
    kernel G; internally 1/sigma_c = mu_c, so E_lm(z) = 2 mu_c K_lm G.
    Depth z <= 0 is measured inward from the surface.
    """
    if elapsed <= 0:
        raise ParameterError("elapsed time must be > 0 (after the transient)")
    z = np.asarray(depth, dtype=float)
    if np.any(z > 0):
        raise ParameterError("interior depth must be <= 0")
    g = _gauss_kernel(z, elapsed)
    return {lm: 2.0 * mu_c * k * g for lm, k in current.coeffs.items()}


def interior_vector_potential_correction(
    current: SurfaceCurrentSpectrum, depth, elapsed: float, mu_c: float
) -> dict:
    """Interior correction Delta_A accumulated by the sheet's diffusion.

    Delta_A_lm(z, t) = -mu_c K_lm [4 D_c (t-t_tr) G(z, t) - |z| erfc(|z| /
    sqrt(4 D_c (t-t_tr)))], vanishing deep inside the target where the
    field is still frozen, and reproducing E = -dA/dt.
    """
    if elapsed <= 0:
        raise ParameterError("elapsed time must be > 0 (after the transient)")
    z = np.asarray(depth, dtype=float)
    if np.any(z > 0):
        raise ParameterError("interior depth must be <= 0")
    w = 4.0 * elapsed * _gauss_kernel(z, elapsed) - np.abs(z) * erfc(
        np.abs(z) / np.sqrt(4.0 * elapsed)
    )
    return {lm: -mu_c * k * w for lm, k in current.coeffs.items()}


# ---------------------------------------------------------------------------
# Step 3: exterior correction and the t^(-1/2) law


def surface_curl_normal(current: SurfaceCurrentSpectrum) -> SurfaceScalarSpectrum:
    """Normal component of the surface curl, n . curl(K), per Y_lm.

    Diagonal in the harmonic basis: a K = kappa X_lm sheet has
    n . curl K = i sqrt(l(l+1)) kappa / a (internal a = 1).
    """
    return SurfaceScalarSpectrum(
        coeffs={
            (l, m): 1j * np.sqrt(l * (l + 1.0)) * kappa
            for (l, m), kappa in current.coeffs.items()
        }
    )


def normal_field_change(
    current: SurfaceCurrentSpectrum, elapsed: float, mu_c: float
) -> SurfaceScalarSpectrum:
    """Boundary data n . Delta_B(t) produced by the relaxing sheet.

    n . Delta_B = -mu_c sqrt(4 (t-t_tr)/pi) n . curl(K), growing as the
    square root of elapsed time; only tangential derivatives of K enter.
    """
    if elapsed <= 0:
        raise ParameterError("elapsed time must be > 0 (after the transient)")
    curl = surface_curl_normal(current)
    factor = -mu_c * np.sqrt(4.0 * elapsed / np.pi)
    return SurfaceScalarSpectrum(
        coeffs={lm: factor * c for lm, c in curl.coeffs.items()}
    )


def exterior_potential_correction(
    bdata: SurfaceScalarSpectrum, mu_b: float
) -> PotentialExpansion:
    """Exterior potential correction from normal-flux boundary data.

    Reuses the sphere's diagonal Neumann solve: with n . Delta_B = b_lm Y_lm
    at r = a and Delta_B = -mu_b grad(Delta_Phi) outside (internal units),
    the decaying coefficient is b_lm / (mu_b (l+1)).
    """
    out = PotentialExpansion()
    for (l, m), b in bdata.coeffs.items():
        if l == 0:
            if abs(b) > 0:
                raise ParameterError("monopole normal-flux data is unphysical")
            continue
        out.decaying[(l, m)] = b / (mu_b * (l + 1))
    return out


def potential_decay_prefactor(l: int, mu_c: float, mu_b: float) -> float:
    """Closed-form phi_l(t)/sqrt(t-t_tr) per unit interior amplitude.

    phi_l(t) = (mu_c l / (mu_b a)) (1 + l mu_c/((l+1) mu_b))
               sqrt(4 D_c (t-t_tr)/pi),
    in internal units (a = D_c = 1); the exterior correction per unit
    interior amplitude is +phi_l (a/r)^(l+1) Y_lm (decaying trapped flux).
    """
    return (
        (mu_c * l / mu_b)
        * (1.0 + l * mu_c / ((l + 1.0) * mu_b))
        * np.sqrt(4.0 / np.pi)
    )


def external_fields(
    dphi_prefactor: PotentialExpansion,
    r,
    theta,
    phi,
    elapsed: float,
    mu_b: float,
    markers: TimeMarkers | None = None,
    window_fraction: float = 0.05,
    transient_guard: float = 10.0,
) -> EarlyTimeField:
    """Exterior field corrections (Delta_A, Delta_B, Delta_E) at points.

    ``dphi_prefactor`` holds the potential-correction coefficients per unit
    sqrt(elapsed) (as produced by the pipeline); the instantaneous
    coefficients are prefactor * sqrt(elapsed).  Delta_B = -mu_b
    grad(Delta_Phi); Delta_A is the tangential multipole -i mu_b
    sqrt((l+1)/l) c_lm (a/r)^(l+1) X_lm whose curl reproduces Delta_B; and
    Delta_E = -d(Delta_A)/dt = -Delta_A / (2 (t-t_tr)) since every
    coefficient grows as sqrt(t-t_tr).  All internal units.
    """
    if elapsed <= 0:
        raise ParameterError("elapsed time must be > 0 (after the transient)")
    ra = np.atleast_1d(np.asarray(r, dtype=float))
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    ph = np.atleast_1d(np.asarray(phi, dtype=float))
    ra, th, ph = np.broadcast_arrays(ra, th, ph)
    if np.any(ra <= 1.0):
        raise ParameterError("exterior fields require r > a")
    shape = ra.shape
    dA = np.zeros((3,) + shape, dtype=complex)
    dB = np.zeros((3,) + shape, dtype=complex)
    for (l, m), c1 in dphi_prefactor.decaying.items():
        c = c1 * np.sqrt(elapsed)
        radial = ra ** -(l + 2.0)
        y = spherical_harmonic(l, m, th, ph)
        dy = spherical_harmonic_dtheta(l, m, th, ph)
        x = vector_spherical_harmonic(l, m, th, ph)
        # Delta_B = -mu_b grad(c r^-(l+1) Y)
        dB[0] += mu_b * c * (l + 1) * radial * y
        dB[1] -= mu_b * c * radial * dy
        if m != 0:
            dB[2] -= mu_b * c * radial * 1j * m * y / np.sin(th)
        amp = -1j * mu_b * np.sqrt((l + 1.0) / l) * c * ra ** -(l + 1.0)
        dA[1] += amp * x[1]
        dA[2] += amp * x[2]
    dE = -dA / (2.0 * elapsed)
    if markers is not None:
        tau_c = markers.tau_c_s
        lo = transient_guard * markers.tau_tr_s
        hi = window_fraction * tau_c
        # elapsed is internal (units tau_c); compare in the same units
        window = (lo / tau_c, hi / tau_c)
        in_window = window[0] <= elapsed <= window[1]
    else:
        window = (0.0, window_fraction)
        in_window = elapsed <= window[1]
    return EarlyTimeField(
        r=ra, theta=th, phi=ph, elapsed=elapsed, dA=dA, dB=dB, dE=dE,
        window=window, in_window=bool(in_window),
    )


# ---------------------------------------------------------------------------
# assembled pipeline


@dataclass(frozen=True)
class EarlyPipeline:
    """All stages of the early-time computation for one scenario.

    ``dphi_prefactor`` holds the exterior correction coefficients per unit
    sqrt(elapsed): Delta_Phi(t) = prefactor * sqrt((t - t_tr)/tau_c).
    """

    illumination: PotentialExpansion
    static: PotentialExpansion
    phi0: PotentialExpansion
    current: SurfaceCurrentSpectrum
    dphi_prefactor: PotentialExpansion
    mu_c: float
    mu_b: float
    max_l: int


def run_early_pipeline(
    target: TargetSpec,
    background_mu_r: float,
    source,
    max_l: int,
    scales: ScaleSystem | None = None,
    source_current_a: float = 1.0,
    grid: AngularGrid | None = None,
) -> EarlyPipeline:
    """Run illumination -> static response -> quench -> sheet -> correction."""
    mu_c = target.material.relative_permeability
    mu_b = background_mu_r
    ill = illumination_coefficients(
        source, target, max_l, scales=scales, source_current_a=source_current_a, grid=grid
    )
    static = static_sphere_response(ill, mu_c, mu_b)
    phi0 = solve_exterior_neumann(interior_normal_h(static), mu_c, mu_b)
    current = surface_current(phi0, static, max_l, grid=grid)
    bdata = normal_field_change(current, 1.0, mu_c)  # per unit sqrt(elapsed)
    dphi1 = exterior_potential_correction(bdata, mu_b)
    return EarlyPipeline(
        illumination=ill,
        static=static,
        phi0=phi0,
        current=current,
        dphi_prefactor=dphi1,
        mu_c=mu_c,
        mu_b=mu_b,
        max_l=max_l,
    )


def early_voltage(
    pipeline: EarlyPipeline,
    rx: Loop,
    gates_s,
    markers: TimeMarkers,
    scales: ScaleSystem,
    target: TargetSpec,
    window_fraction: float = 0.05,
    transient_guard: float = 10.0,
) -> TimeSeries:
    """Receiver voltage of the early-time law on the given gates (SI).

    V(t) = -N_R d/dt oint Delta_A . dl = amplitude / sqrt(t - t_tr); gates
    outside the validity window are flagged per-gate in metadata, never
    dropped.  The series metadata carries the EarlySignal for reuse.
    """
    signal = early_signal(pipeline, rx, markers, scales, target,
                          window_fraction=window_fraction,
                          transient_guard=transient_guard)
    t = np.asarray(gates_s, dtype=float)
    if np.any(t <= markers.t_tr_s):
        raise ParameterError("gates must lie after the transient time t_tr")
    vals = signal.evaluate(t)
    lo, hi = signal.window_s
    quality = np.where(
        t - markers.t_tr_s < lo, "transient", np.where(t - markers.t_tr_s > hi, "late", "ok")
    )
    return TimeSeries(
        times_s=t,
        values=vals,
        metadata={"kind": "early_time", "quality": quality, "signal": signal},
    )


def early_signal(
    pipeline: EarlyPipeline,
    rx: Loop,
    markers: TimeMarkers,
    scales: ScaleSystem,
    target: TargetSpec,
    window_fraction: float = 0.05,
    transient_guard: float = 10.0,
) -> EarlySignal:
    """Power-law amplitude of the early-time receiver voltage (SI)."""
    a = target.radius_m
    tau_c = markers.tau_c_s
    mu_b = pipeline.mu_b
    per = {}
    total = 0.0 + 0.0j
    for (l, m), c1 in pipeline.dphi_prefactor.decaying.items():
        line = exterior_multipole_line_integral(l, m, rx, a) / a
        term = 1j * mu_b * np.sqrt((l + 1.0) / l) * c1 * line / 2.0
        per[(l, m)] = term
        total += term
    if abs(total.imag) > 1e-9 * max(abs(total.real), 1e-300):
        raise ParameterError("unbalanced harmonic pairs leave a complex voltage")
    # V_hat = N_R * total / sqrt(tau_hat); SI: V = V_hat * voltage_scale
    amp = rx.windings * total.real * scales.factor("voltage") * np.sqrt(tau_c)
    window = (transient_guard * markers.tau_tr_s, window_fraction * tau_c)
    return EarlySignal(
        amplitude_v_sqrt_s=float(amp),
        t_ref_s=markers.t_tr_s,
        window_s=window,
        per_harmonic={k: complex(v) for k, v in per.items()},
    )
