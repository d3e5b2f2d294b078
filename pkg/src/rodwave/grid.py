"""Periodic spectral discretization of a truncated line domain.

The domain is [-L, L) sampled at N equispaced nodes (N a power of two),
with the frequency lattice xi_k = pi*k/L, k = -N/2 .. N/2-1.

Transform convention (shared by every norm and multiplier in the package):

    fhat(xi) = integral e^{-i x xi} f(x) dx   ~   dx * DFT(f)

so Parseval reads  sum |f|^2 dx = sum_k |fhat_k|^2 / (2L), i.e. the
xi-side quadrature weight is 1/(2L).  Real fields are handled through
rfft; odd multipliers (i*xi) zero the Nyquist mode so derivatives of
real fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid",
    "Field",
    "PoisonedFieldError",
    "make_grid",
    "field_from_function",
    "spectral_derivative",
    "helmholtz_inverse",
    "lp_norm",
    "restricted_lp_norm",
    "sobolev_norm",
    "w1p_norm",
    "odd_residual",
    "even_residual",
]

DEALIAS_FRACTION = 2.0 / 3.0


class PoisonedFieldError(ValueError):
    """A field contains NaN or Inf and must not enter spectral operations."""


class Grid:
    """Uniform periodic grid on [-L, L) with its rfft frequency lattice."""

    def __init__(self, half_length: float, n_points: int):
        if not half_length > 0:
            raise ValueError(f"half_length must be positive, got {half_length}")
        if n_points < 16 or (n_points & (n_points - 1)) != 0:
            raise ValueError(
                f"n_points must be a power of two >= 16, got {n_points}"
            )
        self.half_length = float(half_length)
        self.n_points = int(n_points)
        self.dx = 2.0 * self.half_length / self.n_points
        self.x = -self.half_length + self.dx * np.arange(self.n_points)

        # ascending full lattice pi*k/L, k = -N/2 .. N/2-1
        k = np.arange(-self.n_points // 2, self.n_points // 2)
        self.frequencies = np.pi * k / self.half_length

        # rfft half lattice, k = 0 .. N/2
        self._xi_r = (
            np.pi * np.arange(self.n_points // 2 + 1) / self.half_length
        )
        deriv = 1j * self._xi_r
        deriv[-1] = 0.0  # Nyquist killed in odd multipliers
        self._deriv_mult = deriv
        self._helmholtz_mult = 1.0 / (1.0 + self._xi_r**2)
        cutoff = DEALIAS_FRACTION * self._xi_r[-1]
        self._dealias_mask = (self._xi_r <= cutoff).astype(float)

    @property
    def xi_max(self) -> float:
        return float(self._xi_r[-1])

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Half-spectrum transform approximating integral e^{-ix xi} f dx."""
        return self.dx * _fft.rfft(values)

    def inverse(self, hat: np.ndarray) -> np.ndarray:
        return _fft.irfft(hat / self.dx, self.n_points)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and self.n_points == other.n_points
            and self.half_length == other.half_length
        )

    def __hash__(self):
        return hash((self.half_length, self.n_points))

    def __repr__(self) -> str:
        return f"Grid(half_length={self.half_length}, n_points={self.n_points})"


@dataclass
class Field:
    """Real-valued samples of a function on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"n_points {self.grid.n_points}"
            )

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise PoisonedFieldError("field contains non-finite values")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def make_grid(half_length: float, n_points: int) -> Grid:
    """Build the periodic grid; n_points must be a power of two >= 16."""
    return Grid(half_length, n_points)


def field_from_function(grid: Grid, fn) -> Field:
    return Field(grid, np.asarray(fn(grid.x), dtype=float))


def spectral_derivative(f: Field) -> Field:
    """d/dx via the i*xi multiplier (Nyquist zeroed)."""
    f.check_finite()
    hat = _fft.rfft(f.values)
    return Field(f.grid, _fft.irfft(hat * f.grid._deriv_mult, f.grid.n_points))


def helmholtz_inverse(f: Field) -> Field:
    """Solve (1 - d^2/dx^2) g = f, i.e. smooth f with the 1/(1+xi^2) multiplier.

    Equivalent to convolution with the exponential kernel e^{-|x|}/2
    (periodized; the difference is O(e^{-2L})).
    """
    f.check_finite()
    hat = _fft.rfft(f.values)
    return Field(
        f.grid, _fft.irfft(hat * f.grid._helmholtz_mult, f.grid.n_points)
    )


def lp_norm(f: Field, p: float) -> float:
    """(sum |f|^p dx)^(1/p) over the full domain."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f.check_finite()
    if p == 2:
        return float(np.sqrt(np.sum(f.values**2) * f.grid.dx))
    return float((np.sum(np.abs(f.values) ** p) * f.grid.dx) ** (1.0 / p))


def restricted_lp_norm(f: Field, p: float, a: float, b: float) -> float:
    """Lp norm of f over the sub-interval [a, b].

    Trapezoid rule on the grid nodes inside (a, b), with f linearly
    interpolated at the two endpoints (which need not be nodes).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = f.grid
    if not (-g.half_length <= a < b <= g.half_length):
        raise ValueError(f"invalid interval [{a}, {b}] for domain "
                         f"[-{g.half_length}, {g.half_length}]")
    f.check_finite()

    def interp_lin(x):
        j = int(np.floor((x + g.half_length) / g.dx))
        j = min(max(j, 0), g.n_points - 1)
        x_j = g.x[j]
        w = (x - x_j) / g.dx
        v_right = f.values[(j + 1) % g.n_points]
        return (1.0 - w) * f.values[j] + w * v_right

    ga = abs(interp_lin(a)) ** p
    gb = abs(interp_lin(b)) ** p

    j_lo = int(np.ceil((a + g.half_length) / g.dx))
    j_hi = int(np.floor((b + g.half_length) / g.dx))
    j_hi = min(j_hi, g.n_points - 1)
    if g.x[j_lo] <= a + 1e-15 * g.dx:
        j_lo += 1  # endpoint coincides with a node; avoid double counting

    if j_lo > j_hi:
        integral = 0.5 * (ga + gb) * (b - a)
    else:
        inner = np.abs(f.values[j_lo : j_hi + 1]) ** p
        integral = np.trapezoid(inner, dx=g.dx) if inner.size > 1 else 0.0
        integral += 0.5 * (ga + inner[0]) * (g.x[j_lo] - a)
        integral += 0.5 * (inner[-1] + gb) * (b - g.x[j_hi])
    return float(integral ** (1.0 / p))


def sobolev_norm(f: Field, s: float) -> float:
    """||f||_{L^2} + ||f||_{Hdot^s} with the |xi|^s Fourier multiplier.

    The homogeneous part uses the package transform convention, under
    which it equals the L^2 norm when s = 0 (the zero mode carries
    multiplier |0|^s = 0 for s > 0 and 1 for s = 0).
    """
    if not 0.0 <= s <= 3.0:
        raise ValueError(f"s must lie in [0, 3], got {s}")
    f.check_finite()
    g = f.grid
    hat = g.forward(f.values)
    power = np.abs(hat) ** 2
    if s == 0:
        mult = np.ones_like(g._xi_r)
    else:
        mult = g._xi_r ** (2.0 * s)
    # rfft storage: modes 1..N/2-1 represent a conjugate pair each
    weights = np.full(g.n_points // 2 + 1, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    hdot_sq = np.sum(weights * mult * power) / (2.0 * g.half_length)
    return lp_norm(f, 2) + float(np.sqrt(hdot_sq))


def w1p_norm(f: Field, p: float) -> float:
    """||f||_{L^p} + ||f'||_{L^p} with the derivative taken spectrally."""
    return lp_norm(f, p) + lp_norm(spectral_derivative(f), p)


def odd_residual(f: Field) -> float:
    """max_j |f(x_j) + f(-x_j)|; zero for an odd field."""
    v = f.values
    mirrored = np.roll(v[::-1], 1)  # value at -x_j
    return float(np.max(np.abs(v + mirrored)))


def even_residual(f: Field) -> float:
    """max_j |f(x_j) - f(-x_j)|; zero for an even field."""
    v = f.values
    mirrored = np.roll(v[::-1], 1)
    return float(np.max(np.abs(v - mirrored)))
