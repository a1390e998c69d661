"""Verifiers for the divisor-counting and weighted-convolution estimates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

DIVISOR_K_LIMIT = 10 ** 9
LEMMA_EPS = 1.0 / 3.0
FIT_EXPONENT = 0.5


def divisors(k: int) -> np.ndarray:
    """Sorted positive divisors of k by trial division up to √|k|."""
    k = abs(int(k))
    if k == 0:
        raise ValueError("k must be nonzero")
    d = np.arange(1, math.isqrt(k) + 1, dtype=np.int64)
    small = d[k % d == 0]
    return np.unique(np.concatenate([small, k // small]))


def divisor_count_near(k: int, q: int, rho: float) -> int:
    """Number of r ∈ Z, r | k, with |r - q| ≤ ρ (both signs of r counted)."""
    if int(k) == 0:
        raise ValueError("k must be nonzero")
    if rho < 1:
        raise ValueError("rho must be at least 1")
    pos = divisors(k)
    q = int(q)
    # |r - q| ≤ ρ for integers r is |r - q| ≤ floor(ρ)
    r = int(math.floor(rho))
    return int(np.count_nonzero(np.abs(pos - q) <= r) + np.count_nonzero(np.abs(-pos - q) <= r))


@dataclass
class DivisorSample:
    k: int
    q: int
    rho: float
    count: int


@dataclass
class DivisorLemmaReport:
    samples: list
    constant: float
    calibration_rho: float
    violations: list = field(default_factory=list)
    exponent: float = FIT_EXPONENT

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def max_ratio(self) -> float:
        return max(s.count / s.rho ** self.exponent for s in self.samples)

    def to_dict(self) -> dict:
        return {
            "samples": len(self.samples), "fitted_constant": self.constant,
            "exponent": self.exponent, "calibration_rho_max": self.calibration_rho,
            "max_ratio": self.max_ratio, "max_count": max(s.count for s in self.samples),
            "violations": [(v.k, v.q, v.rho, v.count) for v in self.violations],
            "passed": self.passed,
        }


def sample_divisor_instances(sample_count: int, seed: int = 0, k_max: int = DIVISOR_K_LIMIT,
                             rho_max: float = 1e3, eps: float = LEMMA_EPS,
                             separation: float = 8.0):
    """Random (k, q, ρ) with |q| ≥ |k|^ε and |q| ≥ separation·ρ.

    q is placed within ρ of a divisor so that counts are nontrivial.  The
    separation keeps the window away from the origin, the regime where the
    count is applied (window radius much smaller than the centre).
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < sample_count:
        k = int(rng.integers(1, k_max + 1)) * (1 if rng.random() < 0.5 else -1)
        rho = float(math.exp(rng.uniform(0.0, math.log(rho_max))))
        r = int(math.floor(rho))
        floor_q = max(abs(k) ** eps, separation * rho)
        pos = divisors(k)
        big = pos[pos >= floor_q + r]
        if big.size == 0:
            continue
        anchor = int(rng.choice(big)) * (1 if rng.random() < 0.5 else -1)
        q = anchor + int(rng.integers(-r, r + 1))
        out.append((k, q, rho))
    return out


def verify_divisor_lemma(sample_count: int = 10_000, seed: int = 0,
                         calibration_rho: float = 16.0, exponent: float = FIT_EXPONENT,
                         **sample_kw) -> DivisorLemmaReport:
    """Fit count ≤ C·ρ^exponent on samples with ρ ≤ calibration_rho, then flag any sample above it.

    C is the largest ratio count/ρ^exponent in the calibration part, so the
    remaining samples (larger ρ) form an out-of-sample check of the growth rate.
    """
    samples = [DivisorSample(k, q, rho, divisor_count_near(k, q, rho))
               for k, q, rho in sample_divisor_instances(sample_count, seed, **sample_kw)]
    calib = [s for s in samples if s.rho <= calibration_rho]
    if not calib:
        raise ValueError("no samples fall in the calibration range")
    C = max(s.count / s.rho ** exponent for s in calib)
    bad = [s for s in samples if s.count > C * s.rho ** exponent * (1 + 1e-12)]
    return DivisorLemmaReport(samples, C, calibration_rho, bad, exponent)


# ----------------------------------------------------------------------------
# weighted convolution


def convolution_gamma(alpha: float, beta: float, eps: float = 0.01) -> float:
    """Decay exponent γ in ∫⟨x-a⟩^{-α}⟨x-b⟩^{-β}dx ≲ ⟨a-b⟩^{-γ}."""
    if not 0 <= alpha <= beta:
        raise ValueError("need 0 ≤ alpha ≤ beta")
    if alpha + beta <= 1:
        raise ValueError("need alpha + beta > 1 for the integral to converge")
    if beta < 1:
        return alpha + beta - 1.0
    if beta == 1:
        return alpha - eps
    return alpha


def convolution_integral(alpha: float, beta: float, a: float, b: float) -> float:
    """Adaptive quadrature of ∫_R ⟨x-a⟩^{-α}⟨x-b⟩^{-β} dx."""
    f = lambda x: (1 + (x - a) ** 2) ** (-alpha / 2) * (1 + (x - b) ** 2) ** (-beta / 2)
    lo, hi = min(a, b), max(a, b)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # tails: substitute x = hi + y, x = lo - y
        total += integrate.quad(lambda y: f(hi + y), 0, np.inf, limit=400, epsabs=0, epsrel=1e-10)[0]
        total += integrate.quad(lambda y: f(lo - y), 0, np.inf, limit=400, epsabs=0, epsrel=1e-10)[0]
        if hi > lo:
            mid = 0.5 * (lo + hi)
            total += integrate.quad(f, lo, mid, limit=400, epsabs=0, epsrel=1e-10)[0]
            total += integrate.quad(f, mid, hi, limit=400, epsabs=0, epsrel=1e-10)[0]
    return total


def default_separation_grid(max_sep: float = 1e3) -> list[tuple[float, float]]:
    """(a, b) pairs covering |a - b| from 0 to max_sep on a log scale, with varied offsets."""
    seps = np.concatenate([[0.0], np.logspace(-1, math.log10(max_sep), 41)])
    pairs = []
    for i, d in enumerate(seps):
        a = (-3.0, 0.0, 7.5)[i % 3]
        sign = 1 if i % 2 == 0 else -1
        pairs.append((a, a + sign * float(d)))
    return pairs


@dataclass
class ConvolutionReport:
    alpha: float
    beta: float
    gamma: float
    separations: np.ndarray
    ratios: np.ndarray
    growth: float
    growth_limit: float = 1.25

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)))

    @property
    def passed(self) -> bool:
        return self.bounded and self.growth <= self.growth_limit

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "max_ratio": float(np.max(self.ratios)), "growth": self.growth,
                "growth_limit": self.growth_limit, "passed": self.passed}


def convolution_lemma_check(alpha: float, beta: float, grid=None, eps: float = 0.01,
                            growth_limit: float = 1.25) -> ConvolutionReport:
    """Ratios ∫⟨x-a⟩^{-α}⟨x-b⟩^{-β}dx · ⟨a-b⟩^γ over a grid of centres.

    Bounded means every ratio is finite; stable means the running maximum over
    |a-b| ≤ D grows by at most ``growth_limit`` when D doubles up to the top of
    the grid.
    """
    gamma = convolution_gamma(alpha, beta, eps)
    grid = default_separation_grid() if grid is None else list(grid)
    seps = np.array([abs(a - b) for a, b in grid], dtype=float)
    ratios = np.array([convolution_integral(alpha, beta, a, b) * (1 + (a - b) ** 2) ** (gamma / 2)
                       for a, b in grid])
    order = np.argsort(seps)
    seps, ratios = seps[order], ratios[order]
    top = seps.max()
    if top > 0:
        half = ratios[seps <= top / 2].max()
        growth = float(ratios.max() / half)
    else:
        growth = 1.0
    return ConvolutionReport(alpha, beta, gamma, seps, ratios, growth, growth_limit)
