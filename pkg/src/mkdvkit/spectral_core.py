"""Fourier representation of 2π-periodic fields.

Coefficients follow ``û(n) = (1/2π) ∫ u(x) e^{-inx} dx`` so that
``u(x) = Σ_n û(n) e^{inx}`` and the mass is ``Σ |û(n)|²``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

# Sign of the momentum functional P(u) = MOMENTUM_SIGN * Σ n |û(n)|².
# The defining integral (1/2π) Im ∫ u ∂x ū dx evaluates to -Σ n |û(n)|²,
# but the resonant/non-resonant splitting of |u|² ∂x u only reduces to the
# renormalized equation with the -iP(u)u term when P = +Σ n |û(n)|².  The
# brute-force check lives in tests/test_nonlinearity.py.
MOMENTUM_SIGN = 1

# Largest |n| for which the vectorized int64 resonance cannot overflow.
RESONANCE_INT64_LIMIT = 700_000


class AliasingError(ValueError):
    """Physical grid too coarse to represent the requested frequencies."""


def japanese(x):
    """Return ⟨x⟩ = (1 + x²)^{1/2}."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + x * x)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients û(n) for |n| ≤ n_max, stored densely.

    ``coeffs[k]`` holds the amplitude of frequency ``k - n_max``.
    """

    coeffs: np.ndarray
    n_max: int
    time: float | None = None

    def __post_init__(self):
        n_max = int(self.n_max)
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        arr = np.array(self.coeffs, dtype=complex).reshape(-1)
        if arr.shape[0] != 2 * n_max + 1:
            raise ValueError(f"expected {2 * n_max + 1} coefficients, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "n_max", n_max)
        if self.time is not None:
            object.__setattr__(self, "time", float(self.time))

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return (self.n_max == other.n_max and self.time == other.time
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    @classmethod
    def zeros(cls, n_max: int, time: float | None = None) -> "SpectralField":
        return cls(np.zeros(2 * n_max + 1, dtype=complex), n_max, time)

    @classmethod
    def from_modes(cls, modes: Mapping[int, complex], n_max: int | None = None,
                   time: float | None = None) -> "SpectralField":
        """Build a field from a ``{frequency: amplitude}`` mapping."""
        if n_max is None:
            n_max = max((abs(int(n)) for n in modes), default=0)
        arr = np.zeros(2 * n_max + 1, dtype=complex)
        for n, c in modes.items():
            n = int(n)
            if abs(n) > n_max:
                raise ValueError(f"frequency {n} exceeds n_max={n_max}")
            arr[n + n_max] = c
        return cls(arr, n_max, time)

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def __getitem__(self, n: int) -> complex:
        n = int(n)
        if abs(n) > self.n_max:
            return 0j
        return complex(self.coeffs[n + self.n_max])

    def to_dict(self) -> dict[int, complex]:
        """Nonzero coefficients as a mapping."""
        return {int(n): complex(c) for n, c in zip(self.freqs, self.coeffs) if c != 0}

    def resized(self, n_max: int) -> "SpectralField":
        """Zero-pad or truncate to a new frequency cutoff."""
        out = np.zeros(2 * n_max + 1, dtype=complex)
        m = min(n_max, self.n_max)
        out[n_max - m:n_max + m + 1] = self.coeffs[self.n_max - m:self.n_max + m + 1]
        return SpectralField(out, n_max, self.time)

    def with_time(self, time: float | None) -> "SpectralField":
        return SpectralField(self.coeffs, self.n_max, time)

    def _binary(self, other, op):
        if isinstance(other, SpectralField):
            n = max(self.n_max, other.n_max)
            return SpectralField(op(self.resized(n).coeffs, other.resized(n).coeffs), n, self.time)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SpectralField(-self.coeffs, self.n_max, self.time)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.coeffs * complex(scalar), self.n_max, self.time)

    __rmul__ = __mul__

    def conj_field(self) -> "SpectralField":
        """Coefficients of the complex conjugate ū: n ↦ conj(û(-n))."""
        return SpectralField(np.conj(self.coeffs[::-1]), self.n_max, self.time)

    def reflected(self) -> "SpectralField":
        """Coefficients of u(-x): n ↦ û(-n)."""
        return SpectralField(self.coeffs[::-1], self.n_max, self.time)

    # serialization -----------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "time": self.time,
            "coeffs": [[int(n), float(c.real), float(c.imag)]
                       for n, c in zip(self.freqs, self.coeffs)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SpectralField":
        n_max = int(data["n_max"])
        arr = np.zeros(2 * n_max + 1, dtype=complex)
        for n, re, im in data["coeffs"]:
            n = int(n)
            if abs(n) > n_max:
                raise ValueError(f"frequency {n} exceeds n_max={n_max}")
            arr[n + n_max] = complex(re, im)
        return cls(arr, n_max, data.get("time"))

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FLParams:
    """Fourier-Lebesgue exponents: weight ⟨n⟩^s in ℓ^p."""

    s: float = 0.5
    p: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise ValueError("s must be finite")
        if not (self.p >= 1 and math.isfinite(self.p)):
            raise ValueError("p must satisfy 1 <= p < inf")


@dataclass(frozen=True)
class ConservedPair:
    mass: float
    momentum: float

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be non-negative")


def _fft_layout(n_max: int, grid_size: int) -> np.ndarray:
    """Positions of frequencies -n_max..n_max in a length-``grid_size`` FFT array."""
    return np.arange(-n_max, n_max + 1) % grid_size


def to_physical(field: SpectralField, grid_size: int) -> np.ndarray:
    """Samples u(x_j), x_j = 2πj/grid_size."""
    if grid_size < 2 * field.n_max + 1:
        raise AliasingError(f"grid_size={grid_size} < 2*n_max+1={2 * field.n_max + 1}")
    spec = np.zeros(grid_size, dtype=complex)
    spec[_fft_layout(field.n_max, grid_size)] = field.coeffs
    return np.fft.ifft(spec) * grid_size


def from_physical(samples, n_max: int, x=None, time: float | None = None) -> SpectralField:
    """Coefficients of uniform samples on [0, 2π).

    If ``x`` is given it must be the grid 2πj/len(samples); anything else is
    rejected rather than silently treated as uniform.
    """
    u = np.asarray(samples, dtype=complex).reshape(-1)
    m = u.shape[0]
    if m < 2 * n_max + 1:
        raise AliasingError(f"{m} samples cannot resolve n_max={n_max}")
    if x is not None:
        x = np.asarray(x, dtype=float).reshape(-1)
        expected = 2 * np.pi * np.arange(m) / m
        if x.shape != expected.shape or not np.allclose(x, expected, rtol=0, atol=1e-12):
            raise ValueError("samples must lie on the uniform grid 2πj/M over [0, 2π)")
    spec = np.fft.fft(u) / m
    return SpectralField(spec[_fft_layout(n_max, m)], n_max, time)


def project_leq(field: SpectralField, N: int) -> SpectralField:
    """Dirichlet projection onto |n| ≤ N."""
    if N < 0:
        raise ValueError("N must be non-negative")
    c = field.coeffs.copy()
    c[np.abs(field.freqs) > N] = 0
    return SpectralField(c, field.n_max, field.time)


def _check_dyadic(N: int) -> None:
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"N={N} is not a dyadic integer")


def project_dyadic(field: SpectralField, N: int) -> SpectralField:
    """Projection onto the dyadic shell N/2 < |n| ≤ N.

    The shells for N = 1, 2, 4, ... partition the nonzero frequencies.
    """
    _check_dyadic(N)
    k = np.abs(field.freqs)
    c = field.coeffs.copy()
    c[~((2 * k > N) & (k <= N))] = 0
    return SpectralField(c, field.n_max, field.time)


def project_much_less(field: SpectralField, N: int) -> SpectralField:
    """Projection onto |n| ≤ N/8."""
    k = np.abs(field.freqs)
    c = field.coeffs.copy()
    c[8 * k > N] = 0
    return SpectralField(c, field.n_max, field.time)


def dyadic_scales(n_max: int) -> list[int]:
    """Dyadic N whose shells cover 1 ≤ |n| ≤ n_max."""
    out, N = [], 1
    while N // 2 < n_max:
        out.append(N)
        N *= 2
    return out


def mass(field: SpectralField) -> float:
    return float(np.sum(np.abs(field.coeffs) ** 2))


def momentum(field: SpectralField) -> float:
    return MOMENTUM_SIGN * float(np.sum(field.freqs * np.abs(field.coeffs) ** 2))


def momentum_quadrature(field: SpectralField, grid_size: int | None = None) -> float:
    """(1/2π) Im ∫ u ∂x ū dx evaluated by quadrature on a physical grid."""
    if grid_size is None:
        grid_size = 4 * field.n_max + 4
    u = to_physical(field, grid_size)
    deriv = SpectralField(1j * field.freqs * field.coeffs, field.n_max)
    ux = to_physical(deriv, grid_size)
    return float(np.mean(u * np.conj(ux)).imag)


def conserved(field: SpectralField) -> ConservedPair:
    return ConservedPair(mass(field), momentum(field))


def fl_norm(field: SpectralField, s: float | FLParams = 0.5, p: float = 2.0) -> float:
    """‖⟨n⟩^s û‖_{ℓ^p}."""
    if isinstance(s, FLParams):
        s, p = s.s, s.p
    else:
        FLParams(s, p)
    w = japanese(field.freqs) ** s * np.abs(field.coeffs)
    scale = w.max(initial=0.0)
    if scale == 0:
        return 0.0
    return float(scale * np.sum((w / scale) ** p) ** (1.0 / p))


def resonance(n1: int, n2: int, n3: int) -> int:
    """Φ = n³ - n1³ - n2³ - n3³ = 3(n1+n2)(n1+n3)(n2+n3), exact."""
    n1, n2, n3 = int(n1), int(n2), int(n3)
    return 3 * (n1 + n2) * (n1 + n3) * (n2 + n3)


def resonance_cubic(n1: int, n2: int, n3: int) -> int:
    n1, n2, n3 = int(n1), int(n2), int(n3)
    return (n1 + n2 + n3) ** 3 - n1 ** 3 - n2 ** 3 - n3 ** 3


def resonance_array(n1, n2, n3) -> np.ndarray:
    """Vectorized int64 resonance; refuses inputs that could overflow."""
    a, b, c = (np.asarray(v, dtype=np.int64) for v in (n1, n2, n3))
    for v in (a, b, c):
        if v.size and np.abs(v).max() > RESONANCE_INT64_LIMIT:
            raise OverflowError("frequencies too large for int64 resonance; use resonance()")
    return 3 * (a + b) * (a + c) * (b + c)
