"""Time evolution of the coupled matter-scalar system.

The matter field advances by Strang splitting: a half kick by the scalar
potential, a full spectral kinetic drift, and a second half kick by the
updated potential. The scalar field advances by a leapfrog second-difference
step of the driven wave equation, with the source density captured at the
step start (phase kicks do not change it, the drift would). Both pieces are
time symmetric, so a trajectory can be retraced exactly: conjugate the
matter field and hand the leapfrog its forward-time next field as the new
previous one.

Three modes share the stepper:

  coupled   full dynamics, scalar field carries its own wave equation
  choquard  scalar field slaved to the instantaneous density through the
            static screened inverse, refreshed at every half kick
  free      coupling switched off: matter drifts freely, scalar field obeys
            the sourceless wave equation

The step-size guard dt <= min(dx/2, 1/2m) keeps the scalar leapfrog inside
its spectral stability window (dt < 2/w_max ~ 0.64 dx) and resolves the
scalar mass oscillation; it can be lifted explicitly for experiments on
the unstable side. The matter kick and drift are exact unitary maps at any
dt, so the guard is about the wave equation, not the Schroedinger half.
For initial data with appreciable power near the lattice Nyquist mode
(noise studies), dt <= M dx^2 additionally keeps every kinetic phase
increment below 2 pi and rules out split-step resonances; pass such a dt
explicitly where that matters.
"""

from __future__ import annotations

import enum
import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .model import FieldState, Grid, PhysicalParams
from .solutions import sample_solution
from .spectral import laplacian, yukawa_invert

KERNEL_PREFACTORS = ("full", "half")
BLOWUP_FACTOR = 1e3


class EvolutionMode(enum.Enum):
    COUPLED = "coupled"
    CHOQUARD = "choquard"
    FREE = "free"

    @classmethod
    def parse(cls, text: "EvolutionMode | str") -> "EvolutionMode":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown evolution mode {text!r} "
                             f"(valid: {valid})") from None


class StabilityError(ValueError):
    """Requested step exceeds the prescribed stability guard."""


class BlowUpError(RuntimeError):
    """Matter amplitude ran away; carries the failure time."""

    def __init__(self, t: float, amplitude: float):
        self.t = t
        self.amplitude = amplitude
        super().__init__(f"matter amplitude {amplitude:.3e} exceeded the "
                         f"blow-up threshold at t = {t:.6g}")


def stability_limit(grid: Grid, params: PhysicalParams) -> float:
    """Largest admissible step: min(dx/2, 1/2m)."""
    dx = grid.spacing
    return min(0.5 * dx, 0.5 / params.m)


@dataclass(frozen=True)
class Trajectory:
    """Strided snapshots plus whatever the observer recorded."""

    times: np.ndarray
    states: tuple[FieldState, ...]
    records: tuple
    step_count: int
    dt: float
    mode: EvolutionMode
    wall_time: float

    @property
    def initial(self) -> FieldState:
        return self.states[0]

    @property
    def final(self) -> FieldState:
        return self.states[-1]


def _source(psi: np.ndarray, params: PhysicalParams) -> np.ndarray:
    return (2.0 * params.M / params.v**2) * (psi.real**2 + psi.imag**2)


def _slaved_field(psi: np.ndarray, params: PhysicalParams, grid: Grid,
                  kernel_prefactor: str) -> np.ndarray:
    phi = yukawa_invert(_source(psi, params), m=params.m, grid=grid)
    if kernel_prefactor == "half":
        phi = 0.5 * phi
    return phi


def scalar_acceleration(phi: np.ndarray, psi: np.ndarray,
                        params: PhysicalParams, grid: Grid,
                        with_source: bool = True) -> np.ndarray:
    """d^2 phi/dt^2 = Lap phi - m^2 phi - (2M/v^2)|psi|^2."""
    acc = laplacian(phi, grid) - params.m**2 * phi
    if with_source:
        acc = acc - _source(psi, params)
    return acc


def evolve(initial: FieldState, T: float, dt: float | None = None, *,
           mode: EvolutionMode | str = EvolutionMode.COUPLED,
           kernel_prefactor: str = "full",
           snapshot_stride: int = 0,
           observer: Callable[[FieldState], object] | None = None,
           observer_stride: int = 1,
           enforce_stability: bool = True,
           blowup_factor: float = BLOWUP_FACTOR) -> Trajectory:
    """Advance a state by T and return the recorded trajectory.

    The step count is ceil(T/dt), with the actual step shrunk to land on T
    exactly; the requested dt is never exceeded. dt defaults to 90% of the
    stability guard. snapshot_stride = 0 keeps only the endpoint states;
    a positive stride also stores every stride-th intermediate state. The
    observer, when given, is called on the initial state and every
    observer_stride steps after that (plus the final state).
    """
    mode = EvolutionMode.parse(mode)
    if kernel_prefactor not in KERNEL_PREFACTORS:
        raise ValueError(f"kernel_prefactor must be one of "
                         f"{KERNEL_PREFACTORS}, got {kernel_prefactor!r}")
    if T < 0.0:
        raise ValueError("T must be nonnegative; retrace a trajectory by "
                         "reversing the final state and evolving forward")
    params, grid = initial.params, initial.grid
    limit = stability_limit(grid, params)
    if dt is None:
        dt = 0.9 * limit
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if enforce_stability and dt > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"dt = {dt:.3e} exceeds the stability guard {limit:.3e} "
            f"= min(dx/2, 1/2m); pass enforce_stability=False "
            f"to run anyway")

    start = time.perf_counter()
    t0 = initial.t
    if T == 0.0:
        recs = (observer(initial),) if observer is not None else ()
        return Trajectory(times=np.array([t0]), states=(initial,),
                          records=recs, step_count=0, dt=dt, mode=mode,
                          wall_time=time.perf_counter() - start)

    n_steps = max(1, math.ceil(T / dt - 1e-12))
    requested_dt, dt = dt, T / n_steps
    if (initial.phi_prev is not None
            and abs(dt - requested_dt) > 1e-9 * requested_dt):
        warnings.warn(
            f"dt adjusted from {requested_dt:.6e} to {dt:.6e} to land on T "
            f"exactly, but the supplied leapfrog history phi_prev was "
            f"presumably built for the requested step; the mismatch acts as "
            f"a spurious initial field velocity. Pass a dt that divides T.",
            stacklevel=2)

    psi = initial.psi.astype(complex, copy=True)
    phi = np.array(initial.phi, dtype=float, copy=True)
    coupled = mode is not EvolutionMode.FREE
    leapfrog = mode is not EvolutionMode.CHOQUARD
    if leapfrog:
        if initial.phi_prev is not None:
            phi_prev = np.array(initial.phi_prev, dtype=float, copy=True)
        else:
            # static Taylor start: phi(t - dt) ~ phi + (dt^2/2) phi_tt
            acc = scalar_acceleration(phi, psi, params, grid,
                                      with_source=coupled)
            phi_prev = phi + 0.5 * dt * dt * acc
    else:
        phi_prev = None

    k2 = grid.k_squared + grid.transverse_k2
    drift_mult = np.exp(-0.5j * dt / params.M * k2)
    fftn, ifftn = sfft.fftn, sfft.ifftn
    half_kick = -0.5j * params.M * dt
    m2 = params.m**2
    dt2 = dt * dt
    if mode is EvolutionMode.CHOQUARD:
        # the density is kick-invariant, so the slaved field at a step start
        # equals the one from the previous step end; compute it once here
        phi = _slaved_field(psi, params, grid, kernel_prefactor)

    initial_peak = float(np.max(np.abs(psi)))
    threshold = blowup_factor * max(initial_peak, 1e-300)

    def materialize(i_step: int) -> FieldState:
        return FieldState(t=t0 + i_step * dt, psi=psi.copy(), phi=phi.copy(),
                          params=params, grid=grid,
                          phi_prev=None if phi_prev is None
                          else phi_prev.copy())

    states = [initial]
    times = [t0]
    records = []
    if observer is not None:
        records.append(observer(initial))

    for i in range(n_steps):
        # running off the stability cliff overflows before the guard below
        # trips; the abort is the handler, so keep numpy quiet about it
        with np.errstate(over="ignore", invalid="ignore"):
            if mode is EvolutionMode.COUPLED:
                src = _source(psi, params)
                psi *= np.exp(half_kick * phi)
                psi = ifftn(drift_mult * fftn(psi))
                phi_next = (2.0 * phi - phi_prev
                            + dt2 * (laplacian(phi, grid) - m2 * phi - src))
                psi *= np.exp(half_kick * phi_next)
                phi_prev, phi = phi, phi_next
            elif mode is EvolutionMode.CHOQUARD:
                psi *= np.exp(half_kick * phi)
                psi = ifftn(drift_mult * fftn(psi))
                phi = _slaved_field(psi, params, grid, kernel_prefactor)
                psi *= np.exp(half_kick * phi)
            else:
                psi = ifftn(drift_mult * fftn(psi))
                phi_next = (2.0 * phi - phi_prev
                            + dt2 * (laplacian(phi, grid) - m2 * phi))
                phi_prev, phi = phi, phi_next

        peak = float(np.max(np.abs(psi)))
        if peak > threshold or not np.isfinite(peak):
            raise BlowUpError(t0 + (i + 1) * dt, peak)
        if leapfrog:
            phi_peak = float(np.max(np.abs(phi)))
            if not np.isfinite(phi_peak):
                raise BlowUpError(t0 + (i + 1) * dt, phi_peak)

        last = i == n_steps - 1
        want_snap = last or (snapshot_stride > 0
                             and (i + 1) % snapshot_stride == 0)
        want_obs = observer is not None and (
            last or (i + 1) % observer_stride == 0)
        if want_snap or want_obs:
            st = materialize(i + 1)
            if want_snap:
                states.append(st)
                times.append(st.t)
            if want_obs:
                records.append(observer(st))

    return Trajectory(times=np.array(times), states=tuple(states),
                      records=tuple(records), step_count=n_steps, dt=dt,
                      mode=mode, wall_time=time.perf_counter() - start)


def reverse_state(state: FieldState, dt: float,
                  mode: EvolutionMode | str = EvolutionMode.COUPLED
                  ) -> FieldState:
    """Turn a state around for exact retracing.

    Conjugating the matter field reverses its motion under the same
    Hamiltonian. The leapfrog scalar history flips by handing over the
    forward-time next field, phi(t + dt) = 2 phi - phi_prev + dt^2 phi_tt,
    as the backward-time previous field. Evolving the result forward by T
    reproduces the state from T earlier, exactly up to roundoff.
    """
    mode = EvolutionMode.parse(mode)
    if state.phi_prev is None or mode is EvolutionMode.CHOQUARD:
        phi_prev_back = None
    else:
        acc = scalar_acceleration(state.phi, state.psi, state.params,
                                  state.grid,
                                  with_source=mode is EvolutionMode.COUPLED)
        phi_prev_back = 2.0 * state.phi - state.phi_prev + dt * dt * acc
    return FieldState(t=state.t, psi=np.conj(state.psi), phi=state.phi,
                      params=state.params, grid=state.grid,
                      phi_prev=phi_prev_back)


def state_from_solution(spec, params: PhysicalParams, grid: Grid,
                        t0: float = 0.0, dt: float | None = None,
                        x0: float = 0.0) -> FieldState:
    """Initial data from a closed-form family member.

    When dt is given, the leapfrog history phi(t0 - dt) is sampled
    analytically, which starts the scalar integrator on the exact
    trajectory instead of the static Taylor guess.
    """
    if grid.dim == 1:
        spec_k2 = spec.gamma**2 + spec.eps**2
        if abs(spec_k2 - grid.transverse_k2) > 1e-12:
            raise ValueError(
                "transverse wavenumbers of the soliton spec and the "
                f"quasi-1D grid disagree: spec carries {spec_k2:.6g}, "
                f"grid {grid.transverse_k2:.6g}")
    s = sample_solution(spec, params, grid, t=t0, x0=x0)
    phi_prev = None
    if dt is not None:
        phi_prev = sample_solution(spec, params, grid, t=t0 - dt, x0=x0).phi
    return FieldState(t=t0, psi=s.psi, phi=s.phi, params=params, grid=grid,
                      phi_prev=phi_prev)


def state_with_static_field(psi: np.ndarray, params: PhysicalParams,
                            grid: Grid, t0: float = 0.0,
                            kernel_prefactor: str = "full") -> FieldState:
    """Initial data with the scalar field slaved to the given density."""
    if kernel_prefactor not in KERNEL_PREFACTORS:
        raise ValueError(f"kernel_prefactor must be one of "
                         f"{KERNEL_PREFACTORS}, got {kernel_prefactor!r}")
    phi = _slaved_field(np.asarray(psi, dtype=complex), params, grid,
                        kernel_prefactor)
    return FieldState(t=t0, psi=np.asarray(psi, dtype=complex), phi=phi,
                      params=params, grid=grid, phi_prev=phi.copy())


def gaussian_packet(grid: Grid, params: PhysicalParams, sigma0: float,
                    k0: float = 0.0, x0: float = 0.0,
                    t0: float = 0.0) -> FieldState:
    """Unit-norm Gaussian packet whose density has standard deviation sigma0.

    psi = N exp(-(x - x0)^2 / 4 sigma0^2) exp(i k0 x), phi = 0. Intended for
    free-mode spreading runs; in coupled mode it simply starts the scalar
    field from rest at zero.
    """
    if sigma0 <= 0.0:
        raise ValueError("sigma0 must be positive")
    if grid.dim != 1:
        raise ValueError("gaussian_packet is a 1D initial condition")
    if grid.length < 12.0 * sigma0:
        raise ValueError(f"domain {grid.length:g} too short for a packet of "
                         f"width {sigma0:g}; need >= {12.0 * sigma0:g}")
    x = grid.axis - x0
    psi = np.exp(-x * x / (4.0 * sigma0**2)) * np.exp(1j * k0 * grid.axis)
    psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.spacing)
    zero = np.zeros(grid.shape)
    return FieldState(t=t0, psi=psi, phi=zero, params=params, grid=grid,
                      phi_prev=zero.copy())


PERTURBATION_KINDS = ("amplitude_noise", "phase_noise", "width_rescale")


def perturb(state: FieldState, kind: str, strength: float,
            seed: int | None = None) -> FieldState:
    """Perturb the matter field and renormalize to the original norm.

    amplitude_noise  psi (1 + strength eta), eta ~ N(0, 1) per node
    phase_noise      psi exp(i strength eta)
    width_rescale    envelope stretched about the domain center by the
                     factor 1 + strength (spline resampling, periodic)

    strength = 0 returns the state unchanged for every kind. The scalar
    field and its history are left alone.
    """
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r} "
                         f"(valid: {', '.join(PERTURBATION_KINDS)})")
    if strength == 0.0:
        return state
    rng = np.random.default_rng(seed)
    psi = state.psi
    if kind == "amplitude_noise":
        psi = psi * (1.0 + strength * rng.standard_normal(psi.shape))
    elif kind == "phase_noise":
        psi = psi * np.exp(1j * strength * rng.standard_normal(psi.shape))
    else:
        factor = 1.0 + strength
        if factor <= 0.0:
            raise ValueError("width_rescale strength must exceed -1")
        from scipy.ndimage import map_coordinates
        grid = state.grid
        idx = np.arange(grid.n, dtype=float)
        center = grid.n / 2.0
        coords = [(center + (idx - center) / factor) % grid.n] * grid.dim
        mesh = np.meshgrid(*coords, indexing="ij") if grid.dim > 1 else coords
        psi = (map_coordinates(psi.real, mesh, order=3, mode="grid-wrap")
               + 1j * map_coordinates(psi.imag, mesh, order=3,
                                      mode="grid-wrap"))
    old = math.sqrt(float(np.sum(np.abs(state.psi) ** 2)))
    new = math.sqrt(float(np.sum(np.abs(psi) ** 2)))
    if new == 0.0:
        raise ValueError("perturbation annihilated the field")
    psi = psi * (old / new)
    return FieldState(t=state.t, psi=psi, phi=state.phi, params=state.params,
                      grid=state.grid, phi_prev=state.phi_prev)
