"""Beamline composition, trajectory running and inverse design.

A beamline is an ordered list of drifts and lenses traversed by a single
packet.  The runner propagates the moment state piecewise with the closed
forms, so boundary continuity is exact by construction; samples are taken on
a per-element grid plus exact event instants.  Over-focusing truncates the
trajectory with an event rather than raising.

Public state (MomentState, event times) stays in natural units; element
durations and the sampling step are laboratory seconds, converted on entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import units
from .elements import Drift, LensConfig
from .moments import (
    LensOrbit,
    MomentState,
    RELATIVISTIC_VELOCITY_BOUND,
    compton_floor,
    lens_state_at,
    matching_ratio,
    propagate_drift,
    waist_dt,
)
from .packet import LGPacket
from .perturbation import ZerothOrderInputs, correction_closed_form
from .units import Particle

FLAG_FOCAL = "FOCAL"
FLAG_OVERFOCUS = "OVERFOCUS"
FLAG_RELATIVISTIC = "RELATIVISTIC"

EVENT_BOUNDARY = "boundary"
EVENT_FOCAL = "focal_point"
EVENT_OVERFOCUS = "overfocus"
EVENT_RELATIVISTIC = "relativistic_warning"


class BeamlineConfigError(ValueError):
    """Beamline or element configuration that cannot be run."""


class NoFocusError(RuntimeError):
    """No focal point (waist) inside the examined drift segment."""


class NoCaptureFieldError(RuntimeError):
    """No positive solenoid field realizes the requested stationary radius."""


@dataclass(frozen=True)
class Beamline:
    """Ordered elements traversed by one packet with entry momentum p0."""

    elements: tuple[Drift | LensConfig, ...]
    particle: Particle
    packet: LGPacket
    p0_ev: float = 0.0

    def __post_init__(self) -> None:
        if len(self.elements) == 0:
            raise BeamlineConfigError("beamline must contain at least one element")
        for element in self.elements:
            if not isinstance(element, (Drift, LensConfig)):
                raise BeamlineConfigError(f"unsupported element type: {element!r}")


@dataclass(frozen=True)
class TrajectoryEvent:
    t: float
    kind: str
    element_index: int


@dataclass(frozen=True)
class TrajectorySample:
    state: MomentState
    element_index: int
    rho_sq_corr1: float | None
    flags: frozenset[str]


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples plus events; completed is False after truncation."""

    samples: tuple[TrajectorySample, ...]
    events: tuple[TrajectoryEvent, ...]
    completed: bool

    def events_of(self, kind: str) -> tuple[TrajectoryEvent, ...]:
        return tuple(e for e in self.events if e.kind == kind)


def _homogeneous_twin(lens: LensConfig) -> LensConfig:
    if lens.is_homogeneous:
        return lens
    return replace(lens, kappa_m=0.0, kappa_e=0.0)


def run(beamline: Beamline, sample_dt_s: float) -> Trajectory:
    """Propagate the packet through every element, sampling every sample_dt_s.

    Each element is sampled on its own grid anchored at its entry, with
    extra samples inserted exactly at focal points and at an over-focus
    crossing.  Focal points (waists of free segments) are located from the
    closed form, well inside the located-root tolerance; an over-focus
    crossing ends the trajectory with an OVERFOCUS event.  Gradient lenses
    propagate their homogeneous part and carry the first-order radius
    correction alongside each sample.
    """
    if not sample_dt_s > 0:
        raise ValueError("sample_dt_s must be positive")
    particle = beamline.particle
    dt_sample = units.time_to_natural(sample_dt_s)
    floor = compton_floor(particle)
    bound = RELATIVISTIC_VELOCITY_BOUND

    state = MomentState.from_packet(beamline.packet, particle, beamline.p0_ev, t_s=0.0)
    samples: list[TrajectorySample] = []
    events: list[TrajectoryEvent] = []
    relativistic_seen = False
    completed = True

    if state.p_z / particle.mass_ev > bound:
        events.append(TrajectoryEvent(state.t, EVENT_RELATIVISTIC, 0))
        relativistic_seen = True

    for index, element in enumerate(beamline.elements):
        entry = state
        duration = units.time_to_natural(element.duration_s)
        if index > 0:
            events.append(TrajectoryEvent(entry.t, EVENT_BOUNDARY, index))

        special: dict[float, set[str]] = {}
        truncate_at: float | None = None

        if isinstance(element, Drift):
            if entry.drho_sq_dt <= 0.0:
                focal_dt = waist_dt(entry)
                if 0.0 <= focal_dt < duration:
                    events.append(
                        TrajectoryEvent(entry.t + focal_dt, EVENT_FOCAL, index)
                    )
                    special.setdefault(focal_dt, set()).add(FLAG_FOCAL)
            evaluate = lambda off: propagate_drift(entry, off, particle)
            corr_of = None
        else:
            lens0 = _homogeneous_twin(element)
            orbit = LensOrbit.from_entry(entry, lens0, particle)
            crossing = orbit.first_crossing_dt(floor, duration)
            if crossing is not None:
                truncate_at = crossing
                events.append(
                    TrajectoryEvent(entry.t + crossing, EVENT_OVERFOCUS, index)
                )
                special.setdefault(crossing, set()).add(FLAG_OVERFOCUS)
            force = units.accelerating_force_natural(element.e0_v_per_m)
            if not relativistic_seen and force > 0.0:
                horizon = truncate_at if truncate_at is not None else duration
                cross_rel = (bound * particle.mass_ev - entry.p_z) / force
                if 0.0 <= cross_rel <= horizon:
                    events.append(
                        TrajectoryEvent(entry.t + cross_rel, EVENT_RELATIVISTIC, index)
                    )
                    relativistic_seen = True
            evaluate = lambda off: lens_state_at(entry, lens0, off, particle)
            if element.is_homogeneous:
                corr_of = None
            else:
                inputs = ZerothOrderInputs.from_entry_state(entry, element, particle)
                kappa = element.kappa
                corr_of = lambda off: correction_closed_form(inputs, kappa, off)

        horizon = truncate_at if truncate_at is not None else duration
        offsets: dict[float, set[str]] = {}
        k = 0
        while True:
            off = k * dt_sample
            if off >= horizon:
                break
            offsets.setdefault(off, set())
            k += 1
        is_last = index == len(beamline.elements) - 1
        if truncate_at is not None or is_last:
            offsets.setdefault(horizon, set())
        for off, fl in special.items():
            offsets.setdefault(off, set()).update(fl)

        for off in sorted(offsets):
            st = evaluate(off)
            flags = set(offsets[off])
            if st.p_z / particle.mass_ev > bound:
                flags.add(FLAG_RELATIVISTIC)
            samples.append(
                TrajectorySample(
                    state=st,
                    element_index=index,
                    rho_sq_corr1=corr_of(off) if corr_of is not None else None,
                    flags=frozenset(flags),
                )
            )

        if truncate_at is not None:
            completed = False
            break
        state = evaluate(duration)

    return Trajectory(tuple(samples), tuple(events), completed)


def state_at(beamline: Beamline, t: float) -> MomentState:
    """Exact state at natural time t, piecewise closed forms, no sampling.

    Raises if t precedes the start, lies beyond the end, or falls past an
    over-focus crossing (the model stops being meaningful there).
    """
    particle = beamline.particle
    floor = compton_floor(particle)
    state = MomentState.from_packet(beamline.packet, particle, beamline.p0_ev, t_s=0.0)
    if t < state.t:
        raise ValueError(f"t = {t} precedes the beamline start")
    for element in beamline.elements:
        duration = units.time_to_natural(element.duration_s)
        offset = t - state.t
        if isinstance(element, Drift):
            if offset <= duration:
                return propagate_drift(state, offset, particle)
            state = propagate_drift(state, duration, particle)
            continue
        lens0 = _homogeneous_twin(element)
        crossing = LensOrbit.from_entry(state, lens0, particle).first_crossing_dt(
            floor, min(offset, duration)
        )
        if crossing is not None:
            raise ValueError(
                f"t = {t} lies beyond the over-focus crossing at {state.t + crossing}"
            )
        if offset <= duration:
            return lens_state_at(state, lens0, offset, particle)
        state = lens_state_at(state, lens0, duration, particle)
    raise ValueError(f"t = {t} lies beyond the end of the beamline")


def find_focal_time(state: MomentState, max_dt: float | None = None) -> float:
    """Absolute time of the waist of the free segment starting at state.

    The free derivative is linear in time, so the root is exact.  Raises
    NoFocusError when the segment only expands (waist in the past) or when
    the waist falls beyond max_dt.
    """
    if state.drho_sq_dt > 0.0:
        raise NoFocusError("segment is expanding; the waist lies in the past")
    dt = waist_dt(state)
    if max_dt is not None and dt > max_dt:
        raise NoFocusError(f"waist at offset {dt} is beyond the segment end {max_dt}")
    return state.t + dt


FOCAL_SLOPE_TOLERANCE = 1e-9


def design_direct_capture(
    state: MomentState,
    particle: Particle,
    n_prime: int = 0,
    length_m: float = 0.1,
    duration_s: float | None = None,
    e0_v_per_m: float = 0.0,
) -> LensConfig:
    """Solenoid field that captures a focal-point state with no oscillation.

    Solves R_st(omega) = <rho^2>_in, a quadratic in omega, taking the
    positive root; placed at a waist (slope zero within tolerance) the
    resulting lens holds <rho^2> constant.  n_prime only labels the target
    stationary level; the field solve is fixed by <u^2> and l.
    """
    slope_scale = 2.0 * math.sqrt(state.rho_sq * state.u_perp_sq)
    if abs(state.drho_sq_dt) > FOCAL_SLOPE_TOLERANCE * slope_scale:
        raise ValueError(
            "state is not at a focal point: d<rho^2>/dt = "
            f"{state.drho_sq_dt} exceeds tolerance"
        )
    if n_prime < 0:
        raise ValueError("n_prime must be non-negative")
    m = particle.mass_ev
    b = 2.0 * state.l / m
    disc = b * b + 8.0 * state.rho_sq * state.u_perp_sq
    if disc < 0.0:
        raise NoCaptureFieldError("no real cyclotron frequency fits this state")
    omega = (-b + math.sqrt(disc)) / (2.0 * state.rho_sq)
    if not omega > 0.0:
        raise NoCaptureFieldError("no positive cyclotron frequency fits this state")
    h0_gauss = units.field_from_cyclotron_natural(omega, particle)
    if duration_s is None:
        duration_s = 3.0 * 2.0 * math.pi / units.cyclotron_frequency(h0_gauss, particle)
    return LensConfig(
        h0_gauss=h0_gauss,
        duration_s=duration_s,
        length_m=length_m,
        e0_v_per_m=e0_v_per_m,
    )


def solve_matching(packet: LGPacket, n_prime: int, particle: Particle) -> float:
    """Solenoid field in gauss that matches the packet waist exactly.

    Inverts rho_H^2(H0) / sigma_r^2 = 4 (2n'+|l|+l+1) / (2n+|l|+1) through
    rho_H^2 = 4 hbar / (|q| H0); closed form, no iteration.
    """
    ratio = matching_ratio(packet.n, packet.l, n_prime)
    rho_h_sq_m2 = float(ratio) * packet.sigma_r_m**2
    h_tesla = 4.0 * units.REDUCED_PLANCK_JS / (units.ELEMENTARY_CHARGE_C * rho_h_sq_m2)
    return h_tesla * units.GAUSS_PER_TESLA


def entry_states(beamline: Beamline) -> tuple[tuple[int, MomentState], ...]:
    """Element index and exact entry state for every reachable lens.

    The walk stops at the first over-focusing lens: its own entry is still
    reported, but everything downstream is unreachable.
    """
    particle = beamline.particle
    floor = compton_floor(particle)
    state = MomentState.from_packet(beamline.packet, particle, beamline.p0_ev, t_s=0.0)
    out: list[tuple[int, MomentState]] = []
    for index, element in enumerate(beamline.elements):
        duration = units.time_to_natural(element.duration_s)
        if isinstance(element, Drift):
            state = propagate_drift(state, duration, particle)
            continue
        out.append((index, state))
        lens0 = _homogeneous_twin(element)
        if LensOrbit.from_entry(state, lens0, particle).first_crossing_dt(floor, duration) is not None:
            break
        state = lens_state_at(state, lens0, duration, particle)
    return tuple(out)
