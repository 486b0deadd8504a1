"""Fourier-multiplier discretization of the fractional Laplacian.

The operator (-Delta)^s is realized through its symbol |xi|^(2s) on the
frequency lattice of a rectangular computational box. Three boundary modes
are supported:

* ``exterior-dirichlet``: the physical region Omega sits centered inside a
  strictly larger periodic box (``pad_factor > 1``). Fields that represent
  states of the constrained problem vanish identically outside Omega; the
  collar of exterior points damps periodic wrap-around. Use
  :func:`mask_exterior` to project onto that subspace.
* ``periodic``: Omega is the whole box, no exterior constraint. This is the
  natural setting for single-mode and dispersion diagnostics.
* ``neumann-1d``: one-dimensional cosine basis on (0, L) sampled at cell
  midpoints, so zero-slope endpoint conditions hold structurally. Restricted
  to d = 1, s = 1.

Grid layout contract: arrays are row-major with spatial axes ordered
(x1, ..., xd). Vector-valued fields carry their m components on one trailing
axis; scalar fields have no trailing axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as _fft
from scipy import integrate as _integrate

EXTERIOR_DIRICHLET = "exterior-dirichlet"
PERIODIC = "periodic"
NEUMANN_1D = "neumann-1d"

_MODES = (EXTERIOR_DIRICHLET, PERIODIC, NEUMANN_1D)


class GridMismatchError(ValueError):
    """A field's shape does not match the grid it is used with."""


def _as_tuple(value, d: int, kind: type) -> tuple:
    if np.isscalar(value):
        return (kind(value),) * d
    out = tuple(kind(v) for v in value)
    if len(out) != d:
        raise ValueError(f"expected {d} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class Domain:
    """Spatial discretization: Omega embedded in a padded computational box.

    Parameters
    ----------
    d:
        Spatial dimension (1 to 3).
    s:
        Fractional order of the operator, s > 0.
    omega_extent:
        Side length of Omega per axis (scalar or per-axis sequence).
    n:
        Grid points per axis of the computational box (even).
    pad_factor:
        Ratio of box side to Omega side. Must be > 1 in exterior-dirichlet
        mode so a nonempty exterior collar exists, and exactly 1 otherwise.
    boundary_mode:
        One of ``exterior-dirichlet``, ``periodic``, ``neumann-1d``.
    """

    d: int
    s: float
    omega_extent: tuple
    n: tuple
    pad_factor: float = 2.0
    boundary_mode: str = EXTERIOR_DIRICHLET

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError(f"spatial dimension must be 1..3, got {self.d}")
        if not self.s > 0:
            raise ValueError(f"fractional order s must be positive, got {self.s}")
        object.__setattr__(self, "omega_extent", _as_tuple(self.omega_extent, self.d, float))
        object.__setattr__(self, "n", _as_tuple(self.n, self.d, int))
        if any(e <= 0 for e in self.omega_extent):
            raise ValueError("omega_extent must be positive on every axis")
        if any(m <= 0 or m % 2 for m in self.n):
            raise ValueError("grid sizes must be positive even integers")
        if self.boundary_mode not in _MODES:
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")
        if self.boundary_mode == EXTERIOR_DIRICHLET:
            if not self.pad_factor > 1:
                raise ValueError("exterior-dirichlet mode needs pad_factor > 1 "
                                 "(nonempty exterior collar)")
        else:
            if self.pad_factor != 1:
                raise ValueError(f"{self.boundary_mode} mode requires pad_factor = 1")
        if self.boundary_mode == NEUMANN_1D:
            if self.d != 1:
                raise ValueError("neumann-1d mode requires d = 1")
            if abs(self.s - 1.0) > 1e-12:
                raise ValueError("neumann-1d mode requires s = 1")

    @property
    def box_extent(self) -> tuple:
        return tuple(self.pad_factor * e for e in self.omega_extent)

    @property
    def h(self) -> tuple:
        """Grid spacing per axis."""
        return tuple(L / m for L, m in zip(self.box_extent, self.n))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def omega_bounds(self) -> tuple:
        """Per-axis (low, high) coordinates of Omega inside the box."""
        out = []
        for L, e in zip(self.box_extent, self.omega_extent):
            lo = 0.5 * (L - e)
            out.append((lo, lo + e))
        return tuple(out)

    def axes(self) -> list[np.ndarray]:
        """Per-axis sample coordinates (midpoints in neumann-1d mode)."""
        out = []
        for L, m, hh in zip(self.box_extent, self.n, self.h):
            if self.boundary_mode == NEUMANN_1D:
                out.append((np.arange(m) + 0.5) * hh)
            else:
                out.append(np.arange(m) * hh)
        return out

    def grids(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """Boolean grid, True strictly inside Omega."""
        if self.boundary_mode != EXTERIOR_DIRICHLET:
            return np.ones(self.n, dtype=bool)
        mask = np.ones(self.n, dtype=bool)
        for ax, (x, (lo, hi)) in enumerate(zip(self.axes(), self.omega_bounds)):
            inside = (x > lo) & (x < hi)
            shape = [1] * self.d
            shape[ax] = self.n[ax]
            mask &= inside.reshape(shape)
        return mask

    def field_components(self, f: np.ndarray) -> int:
        """Validate a field's shape against the grid; return its component count."""
        f = np.asarray(f)
        if f.shape == self.n:
            return 1
        if f.ndim == self.d + 1 and f.shape[: self.d] == self.n:
            return f.shape[-1]
        raise GridMismatchError(
            f"field shape {f.shape} does not match grid {self.n} "
            f"(optionally with one trailing component axis)")


@dataclass(frozen=True)
class SpectralOperator:
    """(-Delta)^s as a multiplier grid over the domain's frequency lattice."""

    domain: Domain
    symbol: np.ndarray

    def __post_init__(self):
        if self.symbol.shape != self.domain.n:
            raise GridMismatchError("symbol grid does not match domain grid")


def build_operator(domain: Domain) -> SpectralOperator:
    """Build the multiplier |xi|^(2s) on the box's standard frequency lattice.

    Angular frequencies are xi_k = 2*pi*k / L_box with k in {-n/2, ..., n/2-1}
    per axis; in neumann-1d mode the cosine eigenvalues (pi*k/L)^2 are used.
    """
    if not domain.s > 0:
        raise ValueError("fractional order s must be positive")
    if domain.boundary_mode == NEUMANN_1D:
        L = domain.box_extent[0]
        xi = np.pi * np.arange(domain.n[0]) / L
        symbol = xi ** (2.0 * domain.s)
    else:
        ksq = np.zeros(domain.n)
        for ax, (L, m) in enumerate(zip(domain.box_extent, domain.n)):
            xi = 2.0 * np.pi * _fft.fftfreq(m, d=L / m)
            shape = [1] * domain.d
            shape[ax] = m
            ksq = ksq + (xi ** 2).reshape(shape)
        symbol = ksq ** domain.s
    symbol.flags.writeable = False
    return SpectralOperator(domain, symbol)


def _symbol_for(op: SpectralOperator, f: np.ndarray) -> np.ndarray:
    op.domain.field_components(f)
    if f.ndim == op.domain.d + 1:
        return op.symbol[..., None]
    return op.symbol


def apply_fractional_laplacian(op: SpectralOperator, f: np.ndarray) -> np.ndarray:
    """Apply (-Delta)^s to a field: inverse transform of symbol * transform."""
    f = np.asarray(f, dtype=float)
    sym = _symbol_for(op, f)
    dom = op.domain
    if dom.boundary_mode == NEUMANN_1D:
        coeff = _fft.dct(f, type=2, axis=0, norm="ortho")
        return _fft.idct(sym * coeff, type=2, axis=0, norm="ortho")
    axes = tuple(range(dom.d))
    fhat = _fft.fftn(f, axes=axes)
    return _fft.ifftn(sym * fhat, axes=axes).real


def l2_norm(domain: Domain, f: np.ndarray) -> float:
    """Rectangle-rule L2 norm over the computational box."""
    f = np.asarray(f, dtype=float)
    domain.field_components(f)
    return math.sqrt(float(np.sum(f * f)) * domain.cell_volume)


def l2_inner(domain: Domain, f: np.ndarray, g: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    domain.field_components(f)
    if f.shape != g.shape:
        raise GridMismatchError("inner product requires matching field shapes")
    return float(np.sum(f * g)) * domain.cell_volume


def seminorm_s(op: SpectralOperator, f: np.ndarray) -> float:
    """Order-s seminorm: L2 norm of (-Delta)^(s/2) f via Parseval."""
    f = np.asarray(f, dtype=float)
    sym = _symbol_for(op, f)
    dom = op.domain
    if dom.boundary_mode == NEUMANN_1D:
        coeff = _fft.dct(f, type=2, axis=0, norm="ortho")
        val = float(np.sum(sym * coeff * coeff)) * dom.cell_volume
    else:
        axes = tuple(range(dom.d))
        fhat = _fft.fftn(f, axes=axes)
        npoints = math.prod(dom.n)
        val = float(np.sum(sym * (fhat.real ** 2 + fhat.imag ** 2)))
        val *= dom.cell_volume / npoints
    return math.sqrt(max(val, 0.0))


def hs_norm(op: SpectralOperator, f: np.ndarray) -> float:
    """Full H^s norm: sqrt(l2_norm^2 + seminorm_s^2)."""
    return math.sqrt(l2_norm(op.domain, f) ** 2 + seminorm_s(op, f) ** 2)


def mask_exterior(domain: Domain, f: np.ndarray) -> np.ndarray:
    """Zero a field on all grid points outside Omega. Idempotent.

    In periodic mode Omega is the whole box and the field is returned
    unchanged (as a copy). Not meaningful in neumann-1d mode.
    """
    if domain.boundary_mode == NEUMANN_1D:
        raise ValueError("mask_exterior is undefined in neumann-1d mode")
    f = np.asarray(f, dtype=float)
    domain.field_components(f)
    if domain.boundary_mode == PERIODIC:
        return f.copy()
    mask = domain.interior_mask
    if f.ndim == domain.d + 1:
        mask = mask[..., None]
    return f * mask


def _tail_series(c: float, d: int, s: float, stop: float) -> tuple[float, float]:
    # Alternating expansion of the radial tail integral
    #   int_c^inf r^(d-1) (1+r^s)^(-2) dr
    #     = sum_j (-1)^j (j+1) c^(d-(j+2)s) / ((j+2)s - d),
    # valid termwise for c^s > 1; magnitudes decrease once c^s >= 4, so the
    # truncation error is bounded by the first omitted term.
    total = 0.0
    for j in range(400):
        p = (j + 2) * s - d
        term = (j + 1) * c ** (-p) / p
        if term < stop or not math.isfinite(term):
            return total, term
        total += term if j % 2 == 0 else -term
    return total, term


def embedding_constant(d: int, s: float, cutoff: float = 50.0, tol: float = 1e-9) -> float:
    """Max-norm embedding constant sqrt(2) * (2 pi)^(-d/2) * I(d, s)^(1/2).

    I(d, s) is the integral of (1 + |xi|^s)^(-2) over R^d, reduced to a
    radial integral (sphere surface measure times a 1-d improper integral).
    The integral is evaluated adaptively up to ``cutoff`` plus an analytic
    alternating-series tail whose truncation error joins the error budget;
    the returned constant is within ``tol`` of the exact value. Requires
    2s > d, otherwise the integral diverges.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not 2.0 * s > d:
        raise ValueError(f"embedding requires 2s > d (got s={s}, d={d})")
    c = max(float(cutoff), 2.0)
    while c ** s < 4.0:
        c *= 2.0
    sphere = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    budget = 0.1 * tol / sphere

    def integrand(r):
        return r ** (d - 1) / (1.0 + r ** s) ** 2

    radial, quad_err = _integrate.quad(integrand, 0.0, c,
                                       epsabs=budget, epsrel=1e-13, limit=400)
    tail, trunc = _tail_series(c, d, s, stop=budget)
    i_value = sphere * (radial + tail)
    return math.sqrt(2.0) * (2.0 * math.pi) ** (-d / 2.0) * math.sqrt(i_value)


@dataclass(frozen=True)
class EmbeddingReport:
    """Outcome of a randomized max-norm vs H^s-norm inequality check."""

    constant: float
    trials: int
    worst_ratio: float
    passed: bool


def _random_band_limited(domain: Domain, rng: np.random.Generator,
                         band: int) -> np.ndarray:
    if domain.boundary_mode == NEUMANN_1D:
        coeff = np.zeros(domain.n[0])
        coeff[: band + 1] = rng.standard_normal(band + 1)
        return _fft.idct(coeff, type=2, norm="ortho")
    spec = rng.standard_normal(domain.n) + 1j * rng.standard_normal(domain.n)
    for ax, m in enumerate(domain.n):
        k = np.minimum(np.arange(m), m - np.arange(m))
        keep = k <= band
        shape = [1] * domain.d
        shape[ax] = m
        spec = spec * keep.reshape(shape)
    axes = tuple(range(domain.d))
    return _fft.ifftn(spec, axes=axes).real


def verify_embedding(op: SpectralOperator, trials: int = 1000, seed: int = 0,
                     band: int | None = None) -> EmbeddingReport:
    """Check max|f| <= C * ||f||_{H^s} on random band-limited fields.

    Returns the worst observed ratio max|f| / (C * hs_norm(f)); the
    inequality holds whenever the box is large enough that the discrete
    frequency lattice resolves the defining integral of the constant (side
    length of order 2*pi suffices for the regimes exercised here).
    """
    dom = op.domain
    const = embedding_constant(dom.d, dom.s)
    if band is None:
        band = max(1, min(dom.n) // 4)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = _random_band_limited(dom, rng, band)
        denom = const * hs_norm(op, f)
        ratio = 0.0 if denom == 0.0 else float(np.max(np.abs(f))) / denom
        worst = max(worst, ratio)
    return EmbeddingReport(constant=const, trials=trials,
                           worst_ratio=worst, passed=worst <= 1.0)
