"""Discrete X^{s,b}_{p,q} norms and the time-cutoff gain check.

‖F‖ = ‖⟨n⟩^s ⟨τ - n³⟩^b F̂(τ, n)‖_{ℓ^p_n L^q_τ} with
F̂(τ, n) = (1/2π) ∫ F(t, n) e^{-itτ} dt, evaluated by a DFT over a uniform
periodic time window.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._numerics import cumulative_simpson_complex
from .kernels import phi_eval
from .spectral_core import japanese

WINDOW = 4.0
DEFAULT_SAMPLES = 1024
LEAKAGE_CELLS = 5
LEAKAGE_FRACTION = 0.01
DEFAULT_PAD = 4


class AliasingWarning(UserWarning):
    """Transform mass piles up at the edge of the τ window."""


class ResolutionWarning(UserWarning):
    """A time scale is not resolved by the grid."""


def time_grid(samples: int = DEFAULT_SAMPLES, window: float = WINDOW) -> np.ndarray:
    """Uniform periodic grid on [-window, window)."""
    return -window + 2 * window * np.arange(samples) / samples


@dataclass(frozen=True)
class SpaceTimeField:
    """Coefficients F(t_k, n) for |n| ≤ n_max on a uniform grid in [-4, 4)."""

    values: np.ndarray
    t_grid: np.ndarray
    n_max: int

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (t.size, 2 * self.n_max + 1):
            raise ValueError("values must have shape (len(t_grid), 2*n_max+1)")
        dt = t[1] - t[0]
        if dt <= 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
            raise ValueError("t_grid must be uniform and increasing")
        if t[0] < -WINDOW - 1e-9 or t[-1] > WINDOW + 1e-9:
            raise ValueError("t_grid must lie in [-4, 4]")
        v = v * (np.abs(t) <= WINDOW)[:, None]
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "t_grid", t)

    @classmethod
    def from_modes(cls, profiles: dict, n_max: int | None = None,
                   t_grid=None) -> "SpaceTimeField":
        """Build from ``{n: f(t) array or callable}``."""
        t = time_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
        if n_max is None:
            n_max = max(abs(int(n)) for n in profiles) if profiles else 0
        vals = np.zeros((t.size, 2 * n_max + 1), dtype=complex)
        for n, prof in profiles.items():
            vals[:, int(n) + n_max] = prof(t) if callable(prof) else prof
        return cls(vals, t, n_max)

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def scaled(self, c: complex) -> "SpaceTimeField":
        return SpaceTimeField(self.values * c, self.t_grid, self.n_max)

    def times_cutoff(self, profile) -> "SpaceTimeField":
        """Multiply by a function of t."""
        return SpaceTimeField(self.values * np.asarray(profile(self.t_grid))[:, None],
                              self.t_grid, self.n_max)

    def conjugated(self) -> "SpaceTimeField":
        """Interaction picture: F(t, n) ↦ e^{-in³t} F(t, n)."""
        k3 = self.freqs.astype(float) ** 3
        return SpaceTimeField(np.exp(-1j * np.outer(self.t_grid, k3)) * self.values,
                              self.t_grid, self.n_max)

    def tau_grid(self, pad: int = 1) -> np.ndarray:
        m = self.t_grid.size * pad
        return 2 * np.pi * (np.arange(m) - m // 2) / (m * self.dt)

    def transform(self, pad: int = 1) -> np.ndarray:
        """F̂(τ_m, n) on :meth:`tau_grid`, shape (pad·len(t_grid), 2N+1).

        F vanishes outside the window, so zero-padding the samples by ``pad``
        gives exact samples of the continuous transform on a τ lattice
        ``pad`` times finer.
        """
        if pad < 1:
            raise ValueError("pad must be a positive integer")
        tau = self.tau_grid(pad)
        spec = np.fft.fftshift(np.fft.fft(self.values, n=self.t_grid.size * pad, axis=0), axes=0)
        return (self.dt / (2 * np.pi)) * np.exp(-1j * self.t_grid[0] * tau)[:, None] * spec


def _leakage_check(mag2: np.ndarray, label: str, pad: int = 1):
    total = mag2.sum()
    if total <= 0:
        return 0.0
    # cells of the unpadded τ grid
    c = LEAKAGE_CELLS * pad
    edge = mag2[:c].sum() + mag2[-c:].sum()
    frac = float(edge / total)
    if frac > LEAKAGE_FRACTION:
        warnings.warn(f"{label}: {100 * frac:.2f}% of the transform mass sits within "
                      f"{LEAKAGE_CELLS} cells of the τ-window edge", AliasingWarning, stacklevel=3)
    return frac


def _lq(weighted: np.ndarray, q: float, dtau: float) -> np.ndarray:
    """Column-wise (Σ |x|^q dτ)^{1/q}, scaled by the column max to stay finite."""
    a = np.abs(weighted)
    scale = a.max(axis=0)
    safe = np.where(scale > 0, scale, 1.0)
    if math.isinf(q):
        return scale
    with np.errstate(divide="ignore"):
        s = np.exp(q * np.log(a / safe)).sum(axis=0) * dtau
    return np.where(scale > 0, safe * s ** (1.0 / q), 0.0)


def _lp(x: np.ndarray, p: float) -> float:
    x = np.abs(x)
    scale = x.max(initial=0.0)
    if scale == 0:
        return 0.0
    if math.isinf(p):
        return float(scale)
    return float(scale * np.sum((x / scale) ** p) ** (1.0 / p))


def xsb_norm(F: SpaceTimeField, s: float, b: float, p: float, q: float,
             method: str = "conjugate", pad: int = DEFAULT_PAD) -> float:
    """Discrete ‖⟨n⟩^s ⟨τ-n³⟩^b F̂‖_{ℓ^p_n L^q_τ}.

    ``method="conjugate"`` transforms e^{-in³t}F and weights by ⟨σ⟩^b
    (σ = τ - n³), so large n³ never leave the τ window.  ``method="direct"``
    transforms F itself and weights by ⟨τ - n³⟩^b; it needs the window to
    contain every n³.  The τ integral is a Riemann sum on the lattice of
    the ``pad``-times zero-padded transform; for q ≠ 2 its error decays like
    exp(-pad·window) because ⟨σ⟩^b is analytic only in a unit strip.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    k = F.freqs
    if method == "conjugate":
        G = F.conjugated()
        hat = G.transform(pad)
        sig = G.tau_grid(pad)[:, None] * np.ones(k.size)
    elif method == "direct":
        hat = F.transform(pad)
        sig = F.tau_grid(pad)[:, None] - (k.astype(float) ** 3)[None, :]
    else:
        raise ValueError(f"unknown method {method!r}")
    _leakage_check((np.abs(hat) ** 2).sum(axis=1), f"xsb_norm[{method}]", pad)
    dtau = 2 * np.pi / (F.t_grid.size * pad * F.dt)
    inner = _lq(japanese(sig) ** b * hat, q, dtau)
    return _lp(japanese(k) ** s * inner, p)


def spacetime_l2(F: SpaceTimeField) -> float:
    """(Σ_n (1/2π) ∫ |F(t,n)|² dt)^{1/2}: equals xsb_norm(F, 0, 0, 2, 2)."""
    return float(np.sqrt(np.sum(np.abs(F.values) ** 2) * F.dt / (2 * np.pi)))


@dataclass(frozen=True)
class XsbParamSet:
    delta: float
    b0: float = field(init=False)
    b1: float = field(init=False)
    q0: float = field(init=False)
    q1: float = field(init=False)
    r0: float = field(init=False)
    r1: float = field(init=False)
    r2: float = field(init=False)

    def __post_init__(self):
        d = float(self.delta)
        if not 0 < d <= 0.1:
            raise ValueError("δ must lie in (0, 0.1]")
        vals = {"b0": 1 - 2 * d, "b1": 1 - d, "q0": 1 / (4 * d), "q1": 1 / (4.5 * d),
                "r0": 1 / (0.5 + d), "r1": 1 / (0.5 + 2 * d), "r2": 1 / (0.5 + 3 * d)}
        for k, v in vals.items():
            object.__setattr__(self, k, v)
        if not (self.b0 < self.b1 and self.q1 < self.q0 and self.r2 < self.r1 < self.r0):
            raise AssertionError("exponent ordering violated")

    # (s, b, q) triples of the four solution spaces; p is chosen by the caller
    @property
    def y0(self):
        return (0.5, 0.5, self.r0)

    @property
    def y1(self):
        return (0.5, 0.5, self.r1)

    @property
    def z0(self):
        return (0.5, self.b0, self.q0)

    @property
    def z1(self):
        return (0.5, self.b1, self.q0)


def make_params(delta: float) -> XsbParamSet:
    return XsbParamSet(delta)


@dataclass
class CutoffGainReport:
    T_list: list
    ratios: list
    theta: float
    delta: float
    passed: bool | None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"T": list(self.T_list), "ratio": [None if not np.isfinite(r) else r
                                                  for r in self.ratios],
                "theta": self.theta, "delta": self.delta, "passed": self.passed,
                "flags": list(self.flags)}


def running_integral_field(generator: SpaceTimeField, outer_cutoff: bool = True) -> SpaceTimeField:
    """F(t) = ∫₀ᵗ G(t') dt' (optionally times φ(t)), so that F(0) = 0.

    Without the outer cutoff F tends to a nonzero constant for large |t|,
    whose transform has a 1/τ singularity and infinite X^{1/2,1/2}_{p,r}
    norm for r ≥ 1; the outer φ keeps F supported in [-2, 2].
    """
    t = generator.t_grid
    k0 = int(np.argmin(np.abs(t)))
    if abs(t[k0]) > 1e-9:
        raise ValueError("t_grid must contain 0")
    vals = generator.values
    right = cumulative_simpson_complex(vals[k0:], t[k0:])
    left = -cumulative_simpson_complex(vals[k0::-1], -t[k0::-1])[::-1]
    F = np.concatenate([left[:-1], right], axis=0)
    if outer_cutoff:
        F = F * phi_eval(t)[:, None]
    return SpaceTimeField(F, t, generator.n_max)


def cutoff_gain_example(samples: int = 2 ** 14, mode: int = 1) -> SpaceTimeField:
    """F = φ(t) ∫₀ᵗ φ(t') e^{i·mode·x} dt'."""
    t = time_grid(samples)
    gen = SpaceTimeField.from_modes({mode: phi_eval}, t_grid=t)
    return running_integral_field(gen)


def cutoff_gain_check(F: SpaceTimeField, T_list, theta: float, params: XsbParamSet,
                      p: float = 2.0) -> CutoffGainReport:
    """Ratios ‖φ_T F‖_{Y0} / (T^θ ‖F‖_{Y1}) over a sweep of T.

    PASS (asserted only for 0 < θ ≤ δ/2) when every ratio is finite and the
    largest ratio over the sweep is at most 1.1 times the largest over the
    first half, i.e. the ratio does not grow as T decreases.
    """
    T_list = list(T_list)
    flags = []
    cells = [T / F.dt for T in T_list]
    if min(cells) < 8:
        warnings.warn("smallest T spans fewer than 8 time-grid cells", ResolutionWarning,
                      stacklevel=2)
        flags.append("under_resolved")
    s, b, q1 = params.y1
    den = xsb_norm(F, s, b, p, q1)
    in_range = 0 < theta <= params.delta / 2 + 1e-15
    if den == 0:
        flags.append("zero_field")
        return CutoffGainReport(T_list, [float("nan")] * len(T_list), theta, params.delta,
                                True if in_range else None, flags)
    s0, b0_, q0 = params.y0
    ratios = []
    for T in T_list:
        num = xsb_norm(F.times_cutoff(lambda t, T=T: phi_eval(t / T)), s0, b0_, p, q0)
        ratios.append(num / (T ** theta * den))
    if not in_range:
        flags.append("theta_outside_lemma_range")
        return CutoffGainReport(T_list, ratios, theta, params.delta, None, flags)
    half = max(1, len(ratios) // 2)
    finite = all(np.isfinite(r) for r in ratios)
    passed = finite and max(ratios) <= 1.1 * max(ratios[:half])
    return CutoffGainReport(T_list, ratios, theta, params.delta, bool(passed), flags)
