"""Shared physical constants, soliton family descriptors, grids, and field containers.

Everything downstream (closed-form samplers, residual audits, time stepping,
diagnostics) consumes the types defined here. All types are immutable after
construction and safe to share across workers.

Units are natural (hbar = c = 1); every quantity is a dimensionless multiple
of the chosen mass scale.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

__all__ = [
    "Family",
    "PhysicalParams",
    "SolitonSpec",
    "Grid",
    "FieldState",
    "ConstraintCheck",
    "ValidationReport",
    "make_grid",
    "validate_params",
]


class Family(enum.Enum):
    """The four closed-form soliton families.

    THREED_A / THREED_B live in three dimensions but depend on (x, t) only,
    with exact plane-wave factors in y and z; they are usually handled
    quasi-1D. ONED_A / ONED_B are genuinely one-dimensional.
    """

    THREED_A = "3d_a"
    THREED_B = "3d_b"
    ONED_A = "1d_a"
    ONED_B = "1d_b"

    @classmethod
    def parse(cls, text: str) -> "Family":
        """Accept both the short tags and the longer spelled-out names."""
        key = text.strip().lower()
        aliases = {
            "3d_a": cls.THREED_A, "threed_a": cls.THREED_A,
            "3d_b": cls.THREED_B, "threed_b": cls.THREED_B,
            "1d_a": cls.ONED_A, "oned_a": cls.ONED_A,
            "1d_b": cls.ONED_B, "oned_b": cls.ONED_B,
        }
        if key not in aliases:
            raise ValueError(
                f"unknown family {text!r}; expected one of "
                "3d_a, 3d_b, 1d_a, 1d_b (or ThreeD_A, ... spellings)")
        return aliases[key]


PHI_PROFILES = ("sech", "sech_squared")
# Accepted spellings for the ONED_A scalar-profile toggle in config files.
PHI_PROFILE_ALIASES = {
    "sech": "sech",
    "as_printed_sech": "sech",
    "sech_squared": "sech_squared",
    "corrected_sech_squared": "sech_squared",
}


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants: particle mass M, scalar mass m, vacuum scale v.

    All three must be positive and finite. The matter field obeys
    i dpsi/dt + (1/2M) Lap psi - M phi psi = 0 and the scalar field
    (Lap - d2/dt2) phi - m^2 phi = (2M/v^2) |psi|^2.
    """

    M: float
    m: float
    v: float

    def __post_init__(self) -> None:
        for name in ("M", "m", "v"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")

    @property
    def mv(self) -> float:
        """The combination m*v that sets the 1D family scales."""
        return self.m * self.v


@dataclass(frozen=True)
class SolitonSpec:
    """Descriptor of one member of a soliton family.

    Which fields are meaningful depends on the family:

    - THREED_A: alpha (inverse width), omega (frequency), gamma, eps.
      Tied by alpha^2 = 2 M omega + M^2 + gamma^2 + eps^2.
    - THREED_B: mu (longitudinal momentum, mu <= M), gamma, eps, and
      alpha = sqrt(mu^2 + gamma^2 + eps^2).
    - ONED_A: phi_profile selects the scalar profile; "sech" is the
      printed first-power form, "sech_squared" the corrected one. Both are
      first class so the residual audit can present them side by side.
    - ONED_B: V_s, the envelope velocity sqrt(1 - (9/4)(m^3 v^2 / M^3)^2).

    Cross-field consistency involves the mass scale and is checked by
    validate_params, not here; prefer the spec_* factory functions in
    solutions.py, which fill the dependent fields.
    """

    family: Family
    alpha: float | None = None
    omega: float | None = None
    gamma: float = 0.0
    eps: float = 0.0
    mu: float | None = None
    V_s: float | None = None
    phi_profile: str = "sech"

    def __post_init__(self) -> None:
        if self.phi_profile not in PHI_PROFILES:
            raise ValueError(
                f"phi_profile must be one of {PHI_PROFILES}, got {self.phi_profile!r}")
        if self.family in (Family.ONED_A, Family.ONED_B):
            if self.gamma != 0.0 or self.eps != 0.0:
                raise ValueError("1D families carry no transverse wavenumbers")

    def with_profile(self, phi_profile: str) -> "SolitonSpec":
        return replace(self, phi_profile=phi_profile)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice, 1D or 3D (cubic), coordinates centered on 0.

    transverse_mode optionally carries a (gamma, eps) pair for quasi-1D runs
    of the 3D families: the y, z plane-wave dependence is then exact and
    enters the matter kinetic term as a constant gamma^2 + eps^2 offset.
    The scalar field has no transverse dependence in that mode.
    """

    dim: int
    n: int
    length: float
    transverse_mode: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise ValueError(f"length must be positive, got {self.length!r}")
        if self.transverse_mode is not None and self.dim != 1:
            raise ValueError("transverse_mode only applies to 1D (quasi-1D) grids")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Per-axis coordinates, identical on every axis: [-L/2, L/2)."""
        return np.arange(self.n) * self.spacing - 0.5 * self.length

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        if self.dim == 1:
            return (self.axis,)
        x = self.axis
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis periodic wavenumbers 2*pi*fftfreq, broadcastable."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        if self.dim == 1:
            return (k,)
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def k_squared(self) -> np.ndarray:
        """Lattice |k|^2, the spectral multiplier of -Laplacian."""
        out = np.zeros(self.shape)
        for ka in self.wavenumbers:
            out = out + ka**2
        return out

    @property
    def transverse_k2(self) -> float:
        """gamma^2 + eps^2 carried analytically in quasi-1D mode (else 0)."""
        if self.transverse_mode is None:
            return 0.0
        g, e = self.transverse_mode
        return g * g + e * e

    @property
    def volume_element(self) -> float:
        return self.spacing**self.dim


def make_grid(dim: int, n: int, length: float,
              transverse_mode: tuple[float, float] | None = None) -> Grid:
    """Build a periodic lattice; n must be a power of two >= 16, dim 1 or 3."""
    return Grid(dim=dim, n=n, length=float(length),
                transverse_mode=transverse_mode)


@dataclass(frozen=True)
class FieldState:
    """Matter field psi, scalar field phi, and the previous-step scalar.

    phi_prev holds phi at t - dt and is what the second-order explicit step
    of the scalar wave equation consumes; it may be None for modes that do
    not evolve phi dynamically (slaved or free evolution), in which case the
    stepper initializes it on first use.
    """

    t: float
    psi: np.ndarray
    phi: np.ndarray
    params: PhysicalParams
    grid: Grid
    phi_prev: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.psi.shape != self.grid.shape:
            raise ValueError(
                f"psi shape {self.psi.shape} does not match grid {self.grid.shape}")
        if self.phi.shape != self.psi.shape:
            raise ValueError(
                f"phi shape {self.phi.shape} does not match psi {self.psi.shape}")
        if np.iscomplexobj(self.phi):
            raise ValueError("phi must be real-valued")
        if self.phi_prev is not None:
            if self.phi_prev.shape != self.phi.shape:
                raise ValueError("phi_prev shape does not match phi")
            if np.iscomplexobj(self.phi_prev):
                raise ValueError("phi_prev must be real-valued")

    def norm(self) -> float:
        """Lattice quadrature of |psi|^2."""
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.volume_element)


@dataclass(frozen=True)
class ConstraintCheck:
    """One validated constraint: name, outcome, and the violating margin.

    margin is positive slack when the constraint passes and the (negative)
    overshoot when it fails; advisory checks never fail the report.
    """

    name: str
    passed: bool
    margin: float
    detail: str = ""
    advisory: bool = False


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    @property
    def warnings(self) -> tuple[ConstraintCheck, ...]:
        return tuple(c for c in self.checks if c.advisory and not c.passed)

    def check(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


_CLOSURE_RTOL = 1e-12


def validate_params(params: PhysicalParams,
                    spec: SolitonSpec | Family) -> ValidationReport:
    """Report every constraint tying params to a family, with margins.

    Never raises: callers decide whether a failed report aborts. Accepts a
    bare Family when only the parameter-level constraints matter (e.g.
    checking the ONED_B velocity bound before constructing a full spec).
    """
    if isinstance(spec, Family):
        spec = SolitonSpec(family=spec)
    checks: list[ConstraintCheck] = []
    M, m, v = params.M, params.m, params.v
    checks.append(ConstraintCheck(
        name="positivity", passed=True, margin=min(M, m, v),
        detail="M, m, v all positive (enforced at construction)"))

    fam = spec.family
    if fam is Family.THREED_A:
        if spec.omega is not None:
            radicand = 2.0 * M * spec.omega + M**2 + spec.gamma**2 + spec.eps**2
            checks.append(ConstraintCheck(
                name="radicand_positive", passed=radicand > 0.0, margin=radicand,
                detail="2 M omega + M^2 + gamma^2 + eps^2 must be positive"))
            if spec.alpha is not None and radicand > 0.0:
                err = abs(spec.alpha**2 - radicand)
                tol = _CLOSURE_RTOL * max(spec.alpha**2, radicand)
                checks.append(ConstraintCheck(
                    name="dispersion_closure", passed=err <= tol, margin=tol - err,
                    detail=f"alpha^2 vs 2 M omega + M^2 + gamma^2 + eps^2: |diff| = {err:.3e}"))
    elif fam is Family.THREED_B:
        if spec.mu is not None:
            checks.append(ConstraintCheck(
                name="momentum_bound", passed=spec.mu <= M, margin=M - spec.mu,
                detail="mu <= M (envelope width factor sqrt(1 - mu^2/M^2) real)"))
            if spec.alpha is not None:
                target = spec.mu**2 + spec.gamma**2 + spec.eps**2
                err = abs(spec.alpha**2 - target)
                tol = _CLOSURE_RTOL * max(spec.alpha**2, target, 1.0)
                checks.append(ConstraintCheck(
                    name="dispersion_closure", passed=err <= tol, margin=tol - err,
                    detail=f"alpha^2 vs mu^2 + gamma^2 + eps^2: |diff| = {err:.3e}"))
    elif fam is Family.ONED_B:
        bound = M**3 - 1.5 * m**3 * v**2
        checks.append(ConstraintCheck(
            name="velocity_real", passed=bound >= 0.0, margin=bound,
            detail="(3/2) m^3 v^2 <= M^3 required for a real envelope velocity"))
        if spec.V_s is not None and bound >= 0.0:
            vs2 = 1.0 - (2.25 * (m**3 * v**2 / M**3) ** 2)
            err = abs(spec.V_s**2 - vs2)
            tol = _CLOSURE_RTOL * max(1.0, abs(vs2))
            checks.append(ConstraintCheck(
                name="velocity_closure", passed=err <= tol, margin=tol - err,
                detail=f"stored V_s^2 vs 1 - (9/4)(m^3 v^2/M^3)^2: |diff| = {err:.3e}"))

    depth = _scalar_depth(params, spec)
    if depth is not None:
        checks.append(ConstraintCheck(
            name="nonrelativistic_validity", passed=depth < M, margin=M - depth,
            detail=f"max|phi| = {depth:.6g} vs M = {M:.6g}; the weak-field "
                   "treatment assumes |phi| < M", advisory=True))
    return ValidationReport(checks=tuple(checks))


def _scalar_depth(params: PhysicalParams, spec: SolitonSpec) -> float | None:
    """Closed-form max|phi| of the family, for the weak-field advisory."""
    try:
        from .solutions import family_coefficients
        return abs(family_coefficients(spec, params).phi_amplitude)
    except Exception:
        # Spec incomplete (bare family, missing dependent fields): no advisory.
        return None
