"""Time integration, energy bookkeeping, and weak-form diagnostics.

The second-order system u_tt = -(-Delta)^s u - grad W(u) is advanced with a
Stoermer-Verlet (kick-drift-kick) scheme. In exterior-dirichlet mode the
position update is followed by the exterior projection and the second kick
uses the projected state, which makes the map identical to plain Verlet on
the constrained subspace: it stays symplectic there, exactly
time-reversible, and keeps every recorded snapshot supported in Omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potentials import Potential
from .spectral import (
    EXTERIOR_DIRICHLET,
    Domain,
    SpectralOperator,
    apply_fractional_laplacian,
    build_operator,
    embedding_constant,
    hs_norm,
    l2_inner,
    l2_norm,
    seminorm_s,
)


class BlowUpError(RuntimeError):
    """Non-finite field values were produced (time step unstable)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass
class FieldState:
    """The pair (u, v = u_t) plus the simulation clock."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> "FieldState":
        return FieldState(self.u.copy(), self.v.copy(), self.t)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Kinetic, elastic (order-s seminorm), and adhesive energy terms."""

    kinetic: float
    elastic: float
    adhesive: float
    total: float

    @staticmethod
    def of(kinetic: float, elastic: float, adhesive: float) -> "EnergyBreakdown":
        return EnergyBreakdown(kinetic, elastic, adhesive,
                               kinetic + elastic + adhesive)


def stability_limit(op: SpectralOperator, potential: Potential) -> float:
    """Largest stable step 2 / sqrt(lambda_max + L_gradW) for the scheme."""
    lam = float(np.max(op.symbol))
    lip = max(potential.grad_lipschitz, 0.0)
    return 2.0 / math.sqrt(lam + lip) if lam + lip > 0 else math.inf


@dataclass
class SimConfig:
    """Fully validated description of one simulation run."""

    domain: Domain
    potential: Potential
    T: float
    dt: float
    u0: np.ndarray
    v0: np.ndarray
    record_every: int = 10
    cfl_safety: float = 0.9
    enforce_cfl: bool = True

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        self.v0 = np.asarray(self.v0, dtype=float)
        mu = self.domain.field_components(self.u0)
        mv = self.domain.field_components(self.v0)
        if self.u0.shape != self.v0.shape:
            raise ValueError("u0 and v0 must have the same shape")
        if mu != self.potential.m or mv != self.potential.m:
            raise ValueError(f"data has {mu} components but potential "
                             f"{self.potential.name} expects {self.potential.m}")
        if not self.T > 0:
            raise ValueError("final time T must be positive")
        if not self.dt > 0:
            raise ValueError("time step dt must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.domain.boundary_mode == EXTERIOR_DIRICHLET:
            outside = ~self.domain.interior_mask
            for label, f in (("u0", self.u0), ("v0", self.v0)):
                vals = f[outside] if f.ndim == self.domain.d else f[outside, :]
                if vals.size and float(np.max(np.abs(vals))) != 0.0:
                    raise ValueError(f"{label} must vanish outside Omega in "
                                     "exterior-dirichlet mode")
        if self.enforce_cfl:
            limit = self.cfl_safety * stability_limit(
                build_operator(self.domain), self.potential)
            if self.dt > limit * (1 + 1e-12):
                raise ValueError(
                    f"dt = {self.dt:g} exceeds the stability bound "
                    f"{limit:g} (cfl_safety = {self.cfl_safety:g})")


@dataclass
class Trajectory:
    """Recorded snapshots, aligned times, and energy series of one run."""

    config: SimConfig
    times: np.ndarray
    states: list[FieldState]
    energies: list[EnergyBreakdown]

    @property
    def totals(self) -> np.ndarray:
        return np.array([e.total for e in self.energies])

    def energy_rows(self):
        for t, e in zip(self.times, self.energies):
            yield (t, e.kinetic, e.elastic, e.adhesive, e.total)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(st.u))) for st in self.states)

    def max_abs_series(self) -> np.ndarray:
        return np.array([float(np.max(np.abs(st.u))) for st in self.states])


def force(op: SpectralOperator, potential: Potential, u: np.ndarray) -> np.ndarray:
    return -apply_fractional_laplacian(op, u) - potential.grad(u)


def step(state: FieldState, op: SpectralOperator, potential: Potential,
         dt: float) -> FieldState:
    """One kick-drift-kick step; projects onto the exterior constraint."""
    dom = op.domain
    vh = state.v + 0.5 * dt * force(op, potential, state.u)
    u1 = state.u + dt * vh
    if dom.boundary_mode == EXTERIOR_DIRICHLET:
        mask = dom.interior_mask if u1.ndim == dom.d else dom.interior_mask[..., None]
        u1 = u1 * mask
        v1 = (vh + 0.5 * dt * force(op, potential, u1)) * mask
    else:
        v1 = vh + 0.5 * dt * force(op, potential, u1)
    if not (np.isfinite(u1).all() and np.isfinite(v1).all()):
        raise BlowUpError("non-finite field values during time step")
    return FieldState(u1, v1, state.t + dt)


def energy(op: SpectralOperator, potential: Potential,
           state: FieldState) -> EnergyBreakdown:
    """Energy of a state: kinetic + elastic + adhesive over Omega."""
    dom = op.domain
    kin = 0.5 * l2_norm(dom, state.v) ** 2
    ela = 0.5 * seminorm_s(op, state.u) ** 2
    w = potential.value(state.u)
    if dom.boundary_mode == EXTERIOR_DIRICHLET:
        w = w * dom.interior_mask
    adh = float(np.sum(w)) * dom.cell_volume
    return EnergyBreakdown.of(kin, ela, adh)


def simulate(config: SimConfig) -> Trajectory:
    """Integrate to T, recording a snapshot every ``record_every`` steps."""
    op = build_operator(config.domain)
    nsteps = max(1, round(config.T / config.dt))
    state = FieldState(config.u0.copy(), config.v0.copy(), 0.0)
    times = [0.0]
    states = [state.copy()]
    energies = [energy(op, config.potential, state)]
    for i in range(1, nsteps + 1):
        try:
            state = step(state, op, config.potential, config.dt)
        except BlowUpError:
            raise BlowUpError(f"blow-up at step {i} (t = {i * config.dt:g})",
                              step=i) from None
        state.t = i * config.dt
        if i % config.record_every == 0 or i == nsteps:
            times.append(state.t)
            states.append(state.copy())
            energies.append(energy(op, config.potential, state))
    return Trajectory(config, np.array(times), states, energies)


def energy_drift_tolerance(config: SimConfig) -> float:
    """Integrator drift allowance 10 * dt^2 * T * (lambda_max + L_gradW)."""
    op = build_operator(config.domain)
    lam = float(np.max(op.symbol))
    return 10.0 * config.dt ** 2 * config.T * (lam + config.potential.grad_lipschitz)


def apriori_l2_bound(energy0: float, u0_l2: float, T: float) -> float:
    """A-priori bound u0_l2 + T * sqrt(2 * energy0) on max_t ||u(t)||_L2."""
    if energy0 < 0:
        raise ValueError("energy bound must be nonnegative")
    return u0_l2 + T * math.sqrt(2.0 * energy0)


def sup_bound_from_energy(traj: Trajectory) -> float:
    """Embedding bound on max|u|: constant times the largest H^s norm seen."""
    dom = traj.config.domain
    const = embedding_constant(dom.d, dom.s)
    op = build_operator(dom)
    return const * max(hs_norm(op, st.u) for st in traj.states)


@dataclass(frozen=True)
class TimeWindow:
    """Smooth scalar window chi(t) with its first two derivatives."""

    value: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    label: str = ""


def window_one() -> TimeWindow:
    return TimeWindow(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, "const")


def window_sin_sq(T: float) -> TimeWindow:
    w = math.pi / T

    def value(t):
        return math.sin(w * t) ** 2

    def d1(t):
        return w * math.sin(2.0 * w * t)

    def d2(t):
        return 2.0 * w * w * math.cos(2.0 * w * t)

    return TimeWindow(value, d1, d2, "sin^2 window")


@dataclass
class TestField:
    """Separable space-time test function chi(t) * psi(x), psi in Omega."""

    psi: np.ndarray
    window: TimeWindow
    label: str = ""


def weak_residual(traj: Trajectory, test_fields: list[TestField],
                  potential: Potential) -> list[float]:
    """Discrete weak-form defect of a trajectory against test functions.

    The second time derivative is removed by two integrations by parts, so
    only recorded u and u_t enter:

        [<u_t, phi> - <u, phi_t>]_0^T + int <u, phi_tt>
        + int [u, phi]_s + int <grad W(u), phi>  over (0, T).

    Time integrals use the composite trapezoid rule on snapshot times. A
    trajectory of a genuine weak solution drives these values to zero under
    (dt, recording) refinement.
    """
    config = traj.config
    dom = config.domain
    op = build_operator(dom)
    times = traj.times
    T = float(times[-1])
    out = []
    for tf in test_fields:
        psi = np.asarray(tf.psi, dtype=float)
        dom.field_components(psi)
        if dom.boundary_mode == EXTERIOR_DIRICHLET:
            outside = psi * ~(dom.interior_mask if psi.ndim == dom.d
                              else dom.interior_mask[..., None])
            if float(np.max(np.abs(outside))) != 0.0:
                raise ValueError("test field must be supported in Omega")
        lpsi = apply_fractional_laplacian(op, psi)
        a = np.array([l2_inner(dom, st.u, psi) for st in traj.states])
        b = np.array([l2_inner(dom, st.u, lpsi) for st in traj.states])
        c = np.array([l2_inner(dom, potential.grad(st.u), psi)
                      for st in traj.states])
        chi = np.array([tf.window.value(t) for t in times])
        chi2 = np.array([tf.window.d2(t) for t in times])
        boundary = (tf.window.value(T) * l2_inner(dom, traj.states[-1].v, psi)
                    - tf.window.value(0.0) * l2_inner(dom, traj.states[0].v, psi)
                    - tf.window.d1(T) * a[-1] + tf.window.d1(0.0) * a[0])
        val = (boundary + np.trapezoid(chi2 * a, times)
               + np.trapezoid(chi * b, times) + np.trapezoid(chi * c, times))
        out.append(float(val))
    return out


def constant_trajectory(domain: Domain, potential: Potential, value,
                        times: np.ndarray, m: int = 1) -> Trajectory:
    """Synthetic trajectory frozen at a constant state (v = 0 throughout)."""
    shape = domain.n if m == 1 else domain.n + (m,)
    u = np.full(shape, 0.0) + np.asarray(value, dtype=float)
    v = np.zeros(shape)
    op = build_operator(domain)
    states = [FieldState(u.copy(), v.copy(), float(t)) for t in times]
    energies = [energy(op, potential, st) for st in states]
    config = SimConfig(domain=domain, potential=potential, T=float(times[-1]),
                       dt=float(times[1] - times[0]) if len(times) > 1 else 1.0,
                       u0=u, v0=v, record_every=1, enforce_cfl=False)
    return Trajectory(config, np.asarray(times, dtype=float), states, energies)


def zero_field(domain: Domain, m: int = 1) -> np.ndarray:
    shape = domain.n if m == 1 else domain.n + (m,)
    return np.zeros(shape)


def constant_field(domain: Domain, value, m: int = 1) -> np.ndarray:
    return zero_field(domain, m) + np.asarray(value, dtype=float)


def bump_field(domain: Domain, amplitude: float = 1.0, width_frac: float = 0.6,
               center=None) -> np.ndarray:
    """Smooth compactly supported bump inside Omega, peak value = amplitude.

    Per axis the profile is exp(1 - 1/(1 - t^2)) on |t| < 1 scaled to the
    requested fraction of Omega's width; it underflows to exact zeros at the
    support edge, so the field is admissible initial data in every mode.
    """
    if not 0 < width_frac <= 1:
        raise ValueError("width_frac must lie in (0, 1]")
    grids = domain.grids()
    out = np.ones(domain.n)
    for ax, ((lo, hi), x) in enumerate(zip(domain.omega_bounds, grids)):
        c = 0.5 * (lo + hi) if center is None else center[ax]
        half = 0.5 * width_frac * (hi - lo)
        t = (x - c) / half
        with np.errstate(divide="ignore", over="ignore"):
            w = np.where(np.abs(t) < 1.0,
                         np.exp(1.0 - 1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0)
        out = out * w
    return amplitude * out


def sine_field(domain: Domain, k=1, amplitude: float = 1.0) -> np.ndarray:
    """Single periodic Fourier mode prod_i sin(2 pi k_i x_i / L_i)."""
    ks = (int(k),) * domain.d if np.isscalar(k) else tuple(int(v) for v in k)
    grids = domain.grids()
    out = np.ones(domain.n)
    for ki, L, x in zip(ks, domain.box_extent, grids):
        out = out * np.sin(2.0 * np.pi * ki * x / L)
    return amplitude * out


def scale_to_hs(op: SpectralOperator, f: np.ndarray, target: float) -> np.ndarray:
    current = hs_norm(op, f)
    if current == 0.0:
        raise ValueError("cannot scale a zero field to a positive norm")
    return f * (target / current)


def scale_to_l2(domain: Domain, f: np.ndarray, target: float) -> np.ndarray:
    current = l2_norm(domain, f)
    if current == 0.0:
        raise ValueError("cannot scale a zero field to a positive norm")
    return f * (target / current)
