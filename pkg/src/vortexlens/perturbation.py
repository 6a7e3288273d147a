"""First-order corrections to the lens orbit from linear field gradients.

For a lens whose magnetic and electric gradients share a single dimensionless
parameter kappa, the correction <rho^2>^(1) obeys a driven oscillator

    d2r1/dt2 + w^2 r1 = 2 u1(t)
                        - kappa (2 w l / (m L)) z0(t)
                        - kappa (2 w^2 / L) z0(t) r0(t)
                        + kappa (2 e|E0| / (m L)) r0(t)

    du1/dt = (kappa w / (m^2 L)) (l + (m w / 2) r0(t)) pz0(t)

with zeroth-order inputs r0, z0, pz0 taken from the homogeneous closed forms
and vanishing initial value, slope and u1 at the lens entry.  Two evaluation
routes are provided: the algebraic closed form of the solution, and direct
numerical integration of the system.  The numerical route is authoritative;
verify_closed_form cross-checks the two and reports any mismatch instead of
trusting either silently.

Everything here is in natural units (see the units module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import units
from .elements import LensConfig
from .moments import LensOrbit, MomentState
from .oracle import ODESpec, integrate_rk4
from .units import Particle

VALIDITY_FRACTION = 0.3
MIN_STEPS_PER_PERIOD = 200


@dataclass(frozen=True)
class Assumption:
    """Factorization assumed when closing the first-order moment system."""

    key: str
    statement: str


# The three closures behind the driven system above, recorded so that every
# correction carries its own fine print.  omega_1 denotes the gradient rate
# kappa * omega_0 / L implied by omega_c(z) = omega_0 (1 + kappa z / L).
APPROXIMATIONS: tuple[Assumption, ...] = (
    Assumption(
        key="cyclotron-radius-split",
        statement=(
            "<omega_c^2(z) rho^2> is expanded to first order in the gradient "
            "and factorized as omega_0^2 <rho^2>^(0) + omega_0^2 <rho^2>^(1) "
            "+ 2 omega_0 omega_1 <z>^(0) <rho^2>^(0)"
        ),
    ),
    Assumption(
        key="radius-momentum-sq-factorization",
        statement=(
            "the O(kappa) mixed average kappa <rho^2 p_z^2> is factorized "
            "into kappa <rho^2>^(0) <p_z^2>^(0)"
        ),
    ),
    Assumption(
        key="radius-momentum-symmetrized-factorization",
        statement=(
            "the symmetrized <rho^2 p_z> combinations (including the "
            "gradient-weighted z terms) are factorized into "
            "<rho^2>^(0) <p_z>^(0), dropping O(kappa^2) remainders"
        ),
    ),
)


def approximation_ledger() -> tuple[Assumption, ...]:
    """Machine-readable list of the closures behind every correction result."""
    return APPROXIMATIONS


@dataclass(frozen=True)
class CorrectionState:
    """First-order corrections at a fixed time past the lens entry.

    rho_sq_1 and u_perp_sq_1 are the corrections to <rho^2> and <u_perp^2>;
    validity_exceeded marks |rho_sq_1| creeping past 30% of the zeroth-order
    value, the point where first-order theory leaves its regime.
    """

    rho_sq_1: float
    u_perp_sq_1: float
    kappa: float
    validity_exceeded: bool
    assumptions: tuple[Assumption, ...]


@dataclass(frozen=True)
class ZerothOrderInputs:
    """Homogeneous-lens data feeding the first-order system (natural units)."""

    rho_sq_in: float
    rho_sq_st: float
    drho_sq_dt_in: float
    p0: float
    force: float
    omega0: float
    length: float
    mass: float
    l: int

    @classmethod
    def from_entry_state(
        cls, state: MomentState, lens: LensConfig, particle: Particle
    ) -> "ZerothOrderInputs":
        """Collect the zeroth-order inputs at a lens entry.

        The gradient model assumes a single kappa, so lenses with
        kappa_m != kappa_e are rejected rather than guessed at.
        """
        lens.kappa  # raises on mixed gradients
        homogeneous = LensOrbit.from_entry(state, lens, particle)
        return cls(
            rho_sq_in=state.rho_sq,
            rho_sq_st=homogeneous.center,
            drho_sq_dt_in=state.drho_sq_dt,
            p0=state.p_z,
            force=units.accelerating_force_natural(lens.e0_v_per_m),
            omega0=homogeneous.omega0,
            length=units.length_to_natural(lens.length_m),
            mass=particle.mass_ev,
            l=state.l,
        )

    def rho0(self, dt: float) -> float:
        w = self.omega0 * dt
        return (
            self.rho_sq_st
            + (self.rho_sq_in - self.rho_sq_st) * math.cos(w)
            + (self.drho_sq_dt_in / self.omega0) * math.sin(w)
        )

    def z0(self, dt: float) -> float:
        return (self.p0 * dt + 0.5 * self.force * dt * dt) / self.mass

    def pz0(self, dt: float) -> float:
        return self.p0 + self.force * dt


def closed_form_groups(inputs: ZerothOrderInputs, kappa: float, dt: float) -> tuple[float, ...]:
    """The five closed-form groups of <rho^2>^(1), individually.

    Two sine groups, a cosine group, a cosine-times-dt group and a secular
    polynomial; their sum is the correction.  Exposed separately so a failed
    cross-check can report which group disagrees.
    """
    a_in = inputs.rho_sq_in
    a_st = inputs.rho_sq_st
    rate = inputs.drho_sq_dt_in
    p0 = inputs.p0
    f = inputs.force
    w = inputs.omega0
    ll = inputs.length
    m = inputs.mass
    sin_w = math.sin(w * dt)
    cos_w = math.cos(w * dt)
    return (
        -(kappa * sin_w / (2.0 * ll * m * w))
        * (f * dt * (rate * dt - 4.0 * (a_in - a_st)) + 2.0 * p0 * (rate * dt - a_in)),
        -(kappa * sin_w / (6.0 * ll * m * w**3))
        * (w**4 * dt**2 * (a_in - a_st) * (f * dt + 3.0 * p0) - 12.0 * f * rate),
        (kappa * cos_w / (ll * m * w**2))
        * (f * (a_in - 4.0 * a_st - 2.0 * rate * dt) - p0 * rate),
        (kappa * cos_w * dt / (6.0 * ll * m))
        * (f * dt * (rate * dt - 3.0 * (a_in - a_st)) + 3.0 * p0 * (rate * dt - 2.0 * (a_in - a_st))),
        -(kappa / (2.0 * ll * m * w**3))
        * (2.0 * w * (f * (a_in - 4.0 * a_st) - p0 * rate) + a_st * w**3 * dt * (f * dt + 2.0 * p0)),
    )


def correction_closed_form(inputs: ZerothOrderInputs, kappa: float, dt: float) -> float:
    """Closed-form <rho^2>^(1) a time dt past the lens entry.

    Exactly linear in kappa; value and slope vanish at dt = 0.  The
    integrated system is the authority; verify_closed_form cross-checks the
    two routes.
    """
    if abs(kappa) > 0.2:
        raise ValueError(f"|kappa| must not exceed 0.2, got {kappa}")
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    g1, g2, g3, g4, g5 = closed_form_groups(inputs, kappa, dt)
    return g1 + g2 + g3 + g4 + g5


def _system_rhs(inputs: ZerothOrderInputs, kappa: float):
    """Right-hand side of the driven first-order system, state (u1, r1, dr1)."""
    w = inputs.omega0
    m = inputs.mass
    ll = inputs.length
    f = inputs.force
    l = inputs.l

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        u1, r1, dr1 = y
        rho0 = inputs.rho0(t)
        du1 = (kappa * w / (m * m * ll)) * (l + 0.5 * m * w * rho0) * inputs.pz0(t)
        drive = (
            2.0 * u1
            - kappa * (2.0 * w * l / (m * ll)) * inputs.z0(t)
            - kappa * (2.0 * w * w / ll) * inputs.z0(t) * rho0
            + kappa * (2.0 * f / (m * ll)) * rho0
        )
        return np.array([du1, dr1, drive - w * w * r1])

    return rhs


def _attach(inputs: ZerothOrderInputs, kappa: float, dt: float, r1: float, u1: float) -> CorrectionState:
    exceeded = abs(r1) > VALIDITY_FRACTION * abs(inputs.rho0(dt))
    return CorrectionState(
        rho_sq_1=r1,
        u_perp_sq_1=u1,
        kappa=kappa,
        validity_exceeded=exceeded,
        assumptions=approximation_ledger(),
    )


def correction_by_quadrature(
    inputs: ZerothOrderInputs, kappa: float, dt: float, step: float
) -> CorrectionState:
    """Corrections at dt by direct integration of the driven system.

    This is the authoritative route.  The step must resolve the oscillation:
    step <= period / 200.
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    period = 2.0 * math.pi / inputs.omega0
    if step > period / MIN_STEPS_PER_PERIOD:
        raise ValueError(
            f"step {step} too coarse; need <= period/{MIN_STEPS_PER_PERIOD} = "
            f"{period / MIN_STEPS_PER_PERIOD}"
        )
    if dt == 0.0:
        return _attach(inputs, kappa, 0.0, 0.0, 0.0)
    _, states = integrate_rk4(
        ODESpec(_system_rhs(inputs, kappa), (0.0, 0.0, 0.0), 0.0, dt, step)
    )
    u1, r1, _ = states[-1]
    return _attach(inputs, kappa, dt, float(r1), float(u1))


def closed_form_correction_state(
    inputs: ZerothOrderInputs, kappa: float, dt: float, step: float | None = None
) -> CorrectionState:
    """Closed-form rho_sq_1 packaged with the quadrature u_perp_sq_1.

    The closed form covers the radius correction only; the velocity
    correction always comes from the integral route.
    """
    r1 = correction_closed_form(inputs, kappa, dt)
    if dt == 0.0:
        return _attach(inputs, kappa, 0.0, r1, 0.0)
    period = 2.0 * math.pi / inputs.omega0
    numeric = correction_by_quadrature(
        inputs, kappa, dt, step if step is not None else period / 512.0
    )
    return _attach(inputs, kappa, dt, r1, numeric.u_perp_sq_1)


@dataclass(frozen=True)
class ClosedFormCheck:
    """Outcome of cross-checking the closed form against the integral route."""

    max_mismatch_over_peak: float
    max_ode_residual_over_drive: float
    tolerance: float
    consistent: bool
    worst_time: float
    groups_at_worst_time: tuple[float, ...]

    def report(self) -> str:
        lines = [
            f"consistent: {self.consistent}",
            f"max |closed - integrated| / peak: {self.max_mismatch_over_peak:.3e}",
            f"max ODE residual / drive: {self.max_ode_residual_over_drive:.3e}",
            f"tolerance: {self.tolerance:.1e}",
        ]
        if not self.consistent:
            lines.append(f"worst time: {self.worst_time}")
            for i, g in enumerate(self.groups_at_worst_time, start=1):
                lines.append(f"closed-form group {i} at worst time: {g:.6e}")
        return "\n".join(lines)


def verify_closed_form(
    inputs: ZerothOrderInputs,
    kappa: float,
    n_periods: float = 4.0,
    tolerance: float = 1e-6,
) -> ClosedFormCheck:
    """Cross-check the closed form against the integrated system.

    Compares the two routes on a dense grid over n_periods and substitutes
    the closed form into the oscillator equation by central differences.
    The integral route is authoritative: a failed check means the closed
    form (or its transcription) is wrong, and the per-group values at the
    worst time are reported for diagnosis.
    """
    period = 2.0 * math.pi / inputs.omega0
    t_end = n_periods * period
    step = period / 2048.0
    ts, states = integrate_rk4(
        ODESpec(_system_rhs(inputs, kappa), (0.0, 0.0, 0.0), 0.0, t_end, step)
    )
    u1s = states[:, 0]
    r1_num = states[:, 1]
    r1_closed = np.array([correction_closed_form(inputs, kappa, t) for t in ts])
    peak = float(np.max(np.abs(r1_num)))
    scale = peak if peak > 0 else 1.0
    mismatch = np.abs(r1_closed - r1_num) / scale
    worst = int(np.argmax(mismatch))

    # residual of the closed form in r1'' + w^2 r1 = D(t), D built from the
    # integrated u1; central differences with a rounding-balanced step
    w = inputs.omega0
    h = period * 1e-4
    drives = np.empty_like(ts)
    residuals = np.empty_like(ts)
    for i, t in enumerate(ts):
        if t < h:
            residuals[i] = 0.0
            drives[i] = 0.0
            continue
        rho0 = inputs.rho0(t)
        drive = (
            2.0 * u1s[i]
            - kappa * (2.0 * w * inputs.l / (inputs.mass * inputs.length)) * inputs.z0(t)
            - kappa * (2.0 * w * w / inputs.length) * inputs.z0(t) * rho0
            + kappa * (2.0 * inputs.force / (inputs.mass * inputs.length)) * rho0
        )
        second = (
            correction_closed_form(inputs, kappa, t + h)
            - 2.0 * correction_closed_form(inputs, kappa, t)
            + correction_closed_form(inputs, kappa, t - h)
        ) / (h * h)
        drives[i] = drive
        residuals[i] = second + w * w * correction_closed_form(inputs, kappa, t) - drive
    drive_scale = float(np.max(np.abs(drives)))
    drive_scale = drive_scale if drive_scale > 0 else 1.0
    max_residual = float(np.max(np.abs(residuals))) / drive_scale

    max_mismatch = float(mismatch[worst])
    consistent = max_mismatch <= tolerance and max_residual <= tolerance
    return ClosedFormCheck(
        max_mismatch_over_peak=max_mismatch,
        max_ode_residual_over_drive=max_residual,
        tolerance=tolerance,
        consistent=consistent,
        worst_time=float(ts[worst]),
        groups_at_worst_time=closed_form_groups(inputs, kappa, float(ts[worst])),
    )
