"""Adhesive-layer potentials, their gradients, and regularized families.

A potential W maps state vectors in R^m to [0, K] and models an adhesive
layer: it is constant outside a bounded set of states, so the restoring
force -grad W switches off once the body leaves the layer. The boundary of
that set (a point pair for scalar states, the unit sphere for vector ones)
is the critical set where the gradient jumps.

Regularized families e -> W_e replace such a potential by smooth members
whose gradients are Lipschitz, either

* ``uniform-c1``: both W_e -> W and grad W_e -> grad W uniformly, possible
  only when grad W is already continuous, or
* ``pointwise-offcritical``: W_e -> W uniformly, grad W_e -> grad W
  pointwise away from the critical set and uniformly on a certified region
  inside it, with grad W_e uniformly bounded.

:func:`certify_family` measures these properties on sample clouds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .reporting import Check

C1_UNIFORM = "c1-uniform"
DISCONTINUOUS_GRAD = "discontinuous-gradient"

UNIFORM_C1 = "uniform-c1"
POINTWISE_OFFCRITICAL = "pointwise-offcritical"


@dataclass(frozen=True)
class Profile:
    """One-dimensional section of a potential, used for mollification.

    ``value`` and ``grad`` are piecewise-smooth callables on R with kinks
    only at ``knots``; the profile is constant for |r| >= ``flat_from``.
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    knots: tuple
    flat_from: float


@dataclass(frozen=True)
class Potential:
    """An evaluable pair (W, grad W) with uniform bound and regularity tag.

    ``value`` maps arrays of states to W values; for m = 1 states are plain
    arrays, for m >= 2 the last axis holds the m components and ``value``
    drops it. ``grad`` preserves the input shape. ``bound`` is a K with
    0 <= W <= K and |grad W| <= K everywhere.
    """

    name: str
    m: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    bound: float
    regularity: str
    grad_lipschitz: float
    critical_set: str = ""
    critical_distance: Callable[[np.ndarray], np.ndarray] | None = None
    profile: Profile | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("codomain dimension m must be >= 1")
        if self.regularity not in (C1_UNIFORM, DISCONTINUOUS_GRAD):
            raise ValueError(f"unknown regularity tag {self.regularity!r}")

    def grad_norm(self, y: np.ndarray) -> np.ndarray:
        g = self.grad(y)
        if self.m == 1:
            return np.abs(g)
        return np.linalg.norm(g, axis=-1)


@dataclass(frozen=True)
class RegularizedFamily:
    """Parametric map eps -> smooth Potential approximating ``base``.

    ``grad_region(eps)`` is the radius of the state-space ball on which the
    gradient deviation is certified for that eps (infinite in uniform-c1
    mode, where the deviation is certified everywhere).
    """

    name: str
    base: Potential
    make: Callable[[float], Potential]
    mode: str
    grad_region: Callable[[float], float]

    def __post_init__(self):
        if self.mode not in (UNIFORM_C1, POINTWISE_OFFCRITICAL):
            raise ValueError(f"unknown family mode {self.mode!r}")


def _radius(y: np.ndarray, m: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if m == 1:
        return np.abs(y)
    return np.linalg.norm(y, axis=-1)


def clipped_quadratic(u_star: float) -> Potential:
    """Scalar adhesive potential: W(u) = u^2 up to |u| = u*, flat beyond.

    The gradient at the jump points |u| = u* takes the inside closure value
    +-2u*, so the restoring force is still 'on' exactly at the layer edge.
    """
    u_star = float(u_star)
    if u_star <= 0:
        raise ValueError("u_star must be positive")
    top = u_star * u_star

    def value(u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= u_star, u * u, top)

    def grad(u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= u_star, 2.0 * u, 0.0)

    return Potential(
        name=f"clipped_quadratic(u_star={u_star:g})",
        m=1,
        value=value,
        grad=grad,
        bound=max(top, 2.0 * u_star),
        regularity=DISCONTINUOUS_GRAD,
        grad_lipschitz=2.0,
        critical_set=f"point pair {{-{u_star:g}, +{u_star:g}}}",
        critical_distance=lambda u: np.abs(np.abs(np.asarray(u, dtype=float)) - u_star),
        profile=Profile(value, grad, (-u_star, u_star), u_star),
    )


def ball_potential(m: int) -> Potential:
    """W(y) = |y|^2 on the closed unit ball, 1 outside the open ball.

    The unit sphere is the critical set; on it the gradient takes the inside
    closure value 2y.
    """
    m = int(m)
    if m < 1:
        raise ValueError("codomain dimension m must be >= 1")
    scalar = clipped_quadratic(1.0)
    if m == 1:
        return scalar

    def value(y):
        r = _radius(y, m)
        return np.where(r <= 1.0, r * r, 1.0)

    def grad(y):
        y = np.asarray(y, dtype=float)
        inside = (_radius(y, m) <= 1.0)[..., None]
        return np.where(inside, 2.0 * y, 0.0)

    return Potential(
        name=f"ball(m={m})",
        m=m,
        value=value,
        grad=grad,
        bound=2.0,
        regularity=DISCONTINUOUS_GRAD,
        grad_lipschitz=2.0,
        critical_set="unit sphere |y| = 1",
        critical_distance=lambda y: np.abs(_radius(y, m) - 1.0),
        profile=scalar.profile,
    )


def zero_potential(m: int = 1) -> Potential:
    """W identically 0; turns the dynamics into the free fractional wave."""

    def value(y):
        return np.zeros(np.shape(_radius(y, m)))

    def grad(y):
        return np.zeros(np.shape(np.asarray(y, dtype=float)))

    return Potential(name="zero()", m=m, value=value, grad=grad, bound=0.0,
                     regularity=C1_UNIFORM, grad_lipschitz=0.0)


def linear_taper_family() -> RegularizedFamily:
    """Regularization of clipped_quadratic(1) with exact piecewise gradient.

    The member gradient keeps the linear shape (2-e)u on |u| <= 1, ramps
    linearly down to zero across 1 <= |u| <= 1+e, and vanishes beyond, so the
    transition zone sits entirely outside the unit interval. Member values
    are the antiderivative normalized by W_e(0) = 0, which makes every
    member nonnegative and constant outside [-1-e, 1+e].
    """
    base = clipped_quadratic(1.0)

    def make(eps: float) -> Potential:
        eps = float(eps)
        if not 0.0 < eps < 2.0:
            raise ValueError(f"taper width must lie in (0, 2), got {eps}")
        slope = 2.0 - eps
        plateau = 1.0 + 0.5 * eps - 0.5 * eps * eps

        def grad(u):
            u = np.asarray(u, dtype=float)
            a = np.abs(u)
            ramp = np.sign(u) * (slope / eps) * (1.0 + eps - a)
            return np.where(a <= 1.0, slope * u,
                            np.where(a < 1.0 + eps, ramp, 0.0))

        def value(u):
            a = np.abs(np.asarray(u, dtype=float))
            inner = 0.5 * slope * a * a
            mid = 0.5 * slope + (slope / eps) * ((1.0 + eps) * (a - 1.0)
                                                 - 0.5 * (a * a - 1.0))
            return np.where(a <= 1.0, inner,
                            np.where(a < 1.0 + eps, mid, plateau))

        return Potential(
            name=f"linear_taper(eps={eps:g})",
            m=1,
            value=value,
            grad=grad,
            bound=max(plateau, slope),
            regularity=C1_UNIFORM,
            grad_lipschitz=max(slope, slope / eps),
            profile=Profile(value, grad, (-1.0 - eps, -1.0, 1.0, 1.0 + eps),
                            1.0 + eps),
        )

    return RegularizedFamily(
        name="linear_taper",
        base=base,
        make=make,
        mode=POINTWISE_OFFCRITICAL,
        grad_region=lambda eps: 1.0,
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _kernel(t: np.ndarray) -> np.ndarray:
    # C-infinity bump exp(-1/(1-t^2)) on (-1, 1), unnormalized.
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    arg = np.where(inside, 1.0 - t * t, 1.0)
    return np.where(inside, np.exp(-1.0 / arg), 0.0)


def _kernel_d1(t: np.ndarray) -> np.ndarray:
    # Derivative of the bump: phi(t) * (-2t) / (1 - t^2)^2.
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    arg = np.where(inside, 1.0 - t * t, 1.0)
    return np.where(inside, np.exp(-1.0 / arg) * (-2.0 * t) / (arg * arg), 0.0)


class MollifiedProfile:
    """Profile convolved with a compact bump of the given radius.

    The smoothed profile and its first two derivatives are evaluated on a
    lattice with quadrature segments split at every kink crossing (so each
    segment integrates a smooth function), then interpolated with cubic
    Hermite pieces fed by the exact lattice derivatives. Where the source
    window sees a single polynomial piece the construction is exact: in
    particular the smoothed gradient equals the original one on the deep
    interior of the quadratic region.
    """

    def __init__(self, profile: Profile, radius: float, points_per_radius: int = 32):
        if radius <= 0:
            raise ValueError("mollification radius must be positive")
        self.radius = float(radius)
        knots = sorted(profile.knots) if profile.knots else [0.0]
        step = self.radius / points_per_radius
        lo = knots[0] - 2.0 * self.radius - 2.0 * step
        hi = knots[-1] + 2.0 * self.radius + 2.0 * step
        count = int(math.ceil((hi - lo) / step)) + 1
        if count > 60000:
            count = 60000
            step = (hi - lo) / (count - 1)
        self.lo = lo
        self.step = step
        self.grid = lo + step * np.arange(count)
        self._val, self._grd, self._grd2 = self._build(profile)
        self.grad_lipschitz = float(np.max(np.abs(self._grd2)))

    def _build(self, profile: Profile):
        u = self.grid
        r = self.radius
        knots = np.asarray(profile.knots, dtype=float)
        # Group lattice points by which kinks fall inside their source window;
        # inside a group the quadrature subdivision has one fixed layout.
        flags = np.abs(u[:, None] - knots[None, :]) < r if knots.size else \
            np.zeros((u.size, 0), dtype=bool)
        val = np.zeros_like(u)
        grd = np.zeros_like(u)
        grd2 = np.zeros_like(u)
        patterns = np.unique(flags, axis=0) if flags.size else np.zeros((1, 0), bool)
        for pat in patterns:
            sel = np.all(flags == pat[None, :], axis=1)
            uu = u[sel]
            active = knots[pat] if knots.size else np.empty(0)
            cuts = np.sort((uu[:, None] - active[None, :]) / r, axis=1) \
                if active.size else np.empty((uu.size, 0))
            bounds = np.concatenate([np.full((uu.size, 1), -1.0), cuts,
                                     np.full((uu.size, 1), 1.0)], axis=1)
            acc = [np.zeros_like(uu) for _ in range(5)]
            for j in range(bounds.shape[1] - 1):
                a, b = bounds[:, j], bounds[:, j + 1]
                mid, half = 0.5 * (a + b), 0.5 * (b - a)
                t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
                wq = half[:, None] * _GL_WEIGHTS[None, :]
                w = wq * _kernel(t)
                kd1 = _kernel_d1(t)
                src = uu[:, None] - r * t
                gsrc = profile.grad(src)
                acc[0] += np.sum(w * profile.value(src), axis=1)
                acc[1] += np.sum(w * gsrc, axis=1)
                # second derivative via the differentiated kernel; the
                # gradient jumps at the knots would otherwise be lost
                acc[2] += np.sum(wq * kd1 * gsrc, axis=1)
                acc[3] += np.sum(w, axis=1)
                # -int t phi'(t) equals int phi; normalizing the rule above
                # by its own discrete value keeps linear gradients exact
                acc[4] += np.sum(-wq * t * kd1, axis=1)
            val[sel] = acc[0] / acc[3]
            grd[sel] = acc[1] / acc[3]
            grd2[sel] = acc[2] / (r * acc[4])
        return val, grd, grd2

    def _hermite(self, x, y, d):
        x = np.clip(np.asarray(x, dtype=float), self.grid[0], self.grid[-1])
        i = np.clip(((x - self.lo) / self.step).astype(int), 0, self.grid.size - 2)
        t = (x - self.grid[i]) / self.step
        t2, t3 = t * t, t * t * t
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + t
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        return (h00 * y[i] + h10 * self.step * d[i]
                + h01 * y[i + 1] + h11 * self.step * d[i + 1])

    def value(self, x):
        return self._hermite(x, self._val, self._grd)

    def grad(self, x):
        return self._hermite(x, self._grd, self._grd2)


def mollified_family(base: Potential, kernel_width_ratio: float = 1.0) -> RegularizedFamily:
    """Family built by convolving ``base`` with bumps of radius eps * ratio.

    Scalar potentials are smoothed directly; for m >= 2 the (radial) base is
    smoothed through its one-dimensional profile, which preserves radial
    symmetry and the uniform gradient bound. The family mode follows the
    base regularity: a base with continuous gradient yields a uniform-c1
    family, a base with gradient jumps yields a pointwise-offcritical one
    whose certified gradient region keeps a distance of two kernel radii
    from the critical set.
    """
    if base.profile is None:
        raise ValueError(f"{base.name} exposes no one-dimensional profile to smooth")
    ratio = float(kernel_width_ratio)
    if ratio <= 0:
        raise ValueError("kernel_width_ratio must be positive")
    m = base.m

    def make(eps: float) -> Potential:
        eps = float(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        prof = MollifiedProfile(base.profile, eps * ratio)
        if m == 1:
            value, grad = prof.value, prof.grad
        else:
            def value(y):
                return prof.value(_radius(y, m))

            def grad(y):
                y = np.asarray(y, dtype=float)
                r = _radius(y, m)
                safe = np.maximum(r, 1e-300)
                factor = prof.grad(r) / safe
                return y * factor[..., None]

        return Potential(
            name=f"mollified({base.name}, ratio={ratio:g}, eps={eps:g})",
            m=m,
            value=value,
            grad=grad,
            bound=base.bound,
            regularity=C1_UNIFORM,
            grad_lipschitz=prof.grad_lipschitz,
        )

    if base.regularity == C1_UNIFORM:
        mode = UNIFORM_C1
        region = lambda eps: math.inf
    else:
        mode = POINTWISE_OFFCRITICAL
        inner = min(abs(k) for k in base.profile.knots) if base.profile.knots else math.inf
        region = lambda eps: inner - 2.0 * eps * ratio

    return RegularizedFamily(
        name=f"mollified({base.name}, ratio={ratio:g})",
        base=base,
        make=make,
        mode=mode,
        grad_region=region,
    )


def constant_family(potential: Potential) -> RegularizedFamily:
    """Degenerate family W_e = W for potentials that are already smooth."""
    if potential.regularity != C1_UNIFORM:
        raise ValueError("constant families need a c1-uniform potential")
    return RegularizedFamily(
        name=f"constant({potential.name})",
        base=potential,
        make=lambda eps: potential,
        mode=UNIFORM_C1,
        grad_region=lambda eps: math.inf,
    )


@dataclass
class FamilyCertification:
    """Sampled convergence measurements for a regularized family."""

    family: str
    mode: str
    eps_list: list[float]
    sup_value_gap: list[float]
    sup_grad_gap: list[float]
    grad_region: list[float]
    lipschitz_estimate: list[float]
    grad_bound: list[float]
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def rows(self):
        for i, eps in enumerate(self.eps_list):
            yield (eps, self.sup_value_gap[i], self.sup_grad_gap[i],
                   self.lipschitz_estimate[i], self.grad_bound[i])


def _sample_states(m: int, rng: np.random.Generator, samples: int,
                   reach: float) -> np.ndarray:
    """Global sample cloud: dense radial structure plus random points."""
    if m == 1:
        dense = np.linspace(-reach, reach, 1601)
        ball = np.linspace(-1.0, 1.0, 801)
        rand = rng.uniform(-reach, reach, samples)
        return np.concatenate([dense, ball, rand])
    radii = np.concatenate([np.linspace(0.0, reach, 401),
                            np.linspace(0.0, 1.0, 201)])
    dirs = rng.standard_normal((radii.size, m))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    dirs[: m] = np.eye(m)[: min(m, dirs.shape[0])]
    structured = radii[:, None] * dirs
    rand = rng.uniform(-reach, reach, (samples, m))
    return np.concatenate([structured, rand], axis=0)


def _lipschitz_estimate(pot: Potential, pts: np.ndarray,
                        rng: np.random.Generator) -> float:
    if pot.m == 1:
        u = np.sort(pts)
        du = np.diff(u)
        keep = du > 1e-9
        slopes = np.abs(np.diff(pot.grad(u)))[keep] / du[keep]
        return float(np.max(slopes)) if slopes.size else 0.0
    a = pts
    b = pts + rng.normal(scale=1e-3, size=pts.shape)
    num = np.linalg.norm(pot.grad(a) - pot.grad(b), axis=-1)
    den = np.linalg.norm(a - b, axis=-1)
    keep = den > 1e-9
    return float(np.max(num[keep] / den[keep]))


def certify_family(family: RegularizedFamily, eps_list, samples: int = 4096,
                   seed: int = 0) -> FamilyCertification:
    """Measure sup|W_e - W|, gradient deviation, and Lipschitz estimates.

    The gradient deviation is taken over the ball of radius
    ``family.grad_region(eps)`` in pointwise-offcritical mode and over the
    whole sample cloud in uniform-c1 mode. Both sup-distance sequences are
    required to decrease along ``eps_list`` within a 10 percent slack.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps_list must be nonempty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    base = family.base
    rng = np.random.default_rng(seed)
    reach = (max(abs(k) for k in base.profile.knots) + 2.0) if base.profile \
        and base.profile.knots else 3.0
    pts = _sample_states(base.m, rng, samples, reach)
    radius = _radius(pts, base.m)
    base_val = base.value(pts)
    base_grad = base.grad(pts)

    cert = FamilyCertification(family=family.name, mode=family.mode,
                               eps_list=eps_list, sup_value_gap=[],
                               sup_grad_gap=[], grad_region=[],
                               lipschitz_estimate=[], grad_bound=[])
    checks = []
    for eps in eps_list:
        member = family.make(eps)
        val_gap = float(np.max(np.abs(member.value(pts) - base_val)))
        region = family.grad_region(eps)
        in_region = radius <= region + 1e-12
        diff = member.grad(pts) - base_grad
        dev = np.abs(diff) if base.m == 1 else np.linalg.norm(diff, axis=-1)
        grad_gap = float(np.max(dev[in_region])) if np.any(in_region) else 0.0
        cert.sup_value_gap.append(val_gap)
        cert.sup_grad_gap.append(grad_gap)
        cert.grad_region.append(region)
        cert.lipschitz_estimate.append(_lipschitz_estimate(member, pts, rng))
        cert.grad_bound.append(float(np.max(member.grad_norm(pts))))
        min_val = float(np.min(member.value(pts)))
        checks.append(Check(f"nonnegative(eps={eps:g})", min_val >= -1e-12,
                            measured=min_val, threshold=0.0, comparator=">="))
        top = max(float(np.max(member.value(pts))), cert.grad_bound[-1])
        checks.append(Check(f"uniform_bound(eps={eps:g})",
                            top <= member.bound + 1e-12,
                            measured=top, threshold=member.bound, comparator="<="))
    for label, seq in (("value_gap", cert.sup_value_gap),
                       ("grad_gap", cert.sup_grad_gap)):
        for i in range(len(eps_list) - 1):
            ok = seq[i + 1] <= 1.1 * seq[i] + 1e-15
            checks.append(Check(
                f"monotone_{label}({eps_list[i]:g}->{eps_list[i + 1]:g})", ok,
                measured=seq[i + 1], threshold=1.1 * seq[i], comparator="<="))
    cert.checks = checks
    return cert
