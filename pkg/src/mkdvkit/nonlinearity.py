"""Cubic nonlinearities, resonant/non-resonant splitting and frequency regions.

All trilinear operators act on Fourier coefficients and return the
coefficients of ``Σ_{n1+n2+n3=n} i n1 û1(n1) û2(n2) û3(n3)`` restricted to
some set of triples.  The conjugate field ū has coefficients conj(û(-n)),
available as ``SpectralField.conj_field``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .spectral_core import (SpectralField, japanese, mass, momentum, resonance,
                            resonance_array)

DIRECT_MAX_N = 64


class RegionLabel(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    RESONANT = "Resonant"


REGION_ORDER = (RegionLabel.A, RegionLabel.B, RegionLabel.C, RegionLabel.D)
_REGION_CODE = {RegionLabel.RESONANT: 0, RegionLabel.A: 1, RegionLabel.B: 2,
                RegionLabel.C: 3, RegionLabel.D: 4}


@dataclass(frozen=True)
class RegionConstants:
    """Concrete constants for the relations between frequency sizes.

    ``a ≪ b`` means ``much_less_factor * a <= b``; ``a ≲ b`` means
    ``a <= comparable_factor * b``; ``a ∼ b`` means both ``a ≲ b`` and
    ``b ≲ a``.
    """

    much_less_factor: int = 8
    comparable_factor: int = 4

    def __post_init__(self):
        if self.much_less_factor < 2 or self.comparable_factor < 2:
            raise ValueError("region factors must be >= 2")


@dataclass(frozen=True)
class FrequencyTriple:
    n1: int
    n2: int
    n3: int
    n: int = field(init=False)
    phi: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n1) + int(self.n2) + int(self.n3))
        object.__setattr__(self, "phi", resonance(self.n1, self.n2, self.n3))


# ---------------------------------------------------------------------------
# full cubic nonlinearity

def _cubic_direct(c: np.ndarray, N: int, n_out: int) -> np.ndarray:
    k = np.arange(-N, N + 1)
    full = np.convolve(np.convolve(1j * k * c, np.conj(c[::-1])), c)
    return _window(full, 3 * N, n_out)


def _cubic_fft(c: np.ndarray, N: int, n_out: int) -> np.ndarray:
    # Products reach |n| ≤ 3N; a grid of M > 3N + n_out keeps |n| ≤ n_out alias-free.
    M = scipy.fft.next_fast_len(3 * N + n_out + 1)
    k = np.arange(-N, N + 1)
    idx = k % M
    spec = np.zeros(M, dtype=complex)
    spec[idx] = c
    u = scipy.fft.ifft(spec) * M
    spec[idx] = 1j * k * c
    ux = scipy.fft.ifft(spec) * M
    prod = scipy.fft.fft((u.real ** 2 + u.imag ** 2) * ux) / M
    return prod[np.arange(-n_out, n_out + 1) % M]


def _window(full: np.ndarray, center: int, n_out: int) -> np.ndarray:
    """Coefficients -n_out..n_out from an array whose index ``center`` is n=0."""
    out = np.zeros(2 * n_out + 1, dtype=complex)
    m = min(n_out, center)
    out[n_out - m:n_out + m + 1] = full[center - m:center + m + 1]
    return out


def cubic_coeffs(c: np.ndarray, N: int, n_out: int | None = None,
                 method: str = "auto") -> np.ndarray:
    """Coefficients of |u|² ∂x u for the coefficient array ``c`` (length 2N+1)."""
    if n_out is None:
        n_out = N
    if method == "auto":
        method = "direct" if N <= DIRECT_MAX_N else "fft"
    if method == "direct":
        return _cubic_direct(c, N, n_out)
    if method == "fft":
        return _cubic_fft(c, N, n_out)
    raise ValueError(f"unknown method {method!r}")


def mkdv_nonlinearity(field: SpectralField, sign: int = 1, n_out: int | None = None,
                      method: str = "auto") -> SpectralField:
    """Coefficients of ±|u|² ∂x u."""
    n_out = field.n_max if n_out is None else n_out
    return SpectralField(sign * cubic_coeffs(field.coeffs, field.n_max, n_out, method),
                         n_out, field.time)


def _pad(arr: np.ndarray, N: int, n_out: int) -> np.ndarray:
    return _window(arr, N, n_out)


def mkdv1_nonlinearity(field: SpectralField, sign: int = 1, n_out: int | None = None,
                       method: str = "auto") -> SpectralField:
    """Coefficients of ±(|u|² - μ(u)) ∂x u."""
    n_out = field.n_max if n_out is None else n_out
    base = cubic_coeffs(field.coeffs, field.n_max, n_out, method)
    drift = _pad(1j * field.freqs * field.coeffs * mass(field), field.n_max, n_out)
    return SpectralField(sign * (base - drift), n_out, field.time)


def mkdv2_nonlinearity(field: SpectralField, sign: int = 1, n_out: int | None = None,
                       method: str = "auto") -> SpectralField:
    """Coefficients of the doubly renormalized nonlinearity.

    ``method="triple"`` sums the non-resonant triples explicitly and subtracts
    ``i n |û(n)|² û(n)``; ``method="identity"`` uses the equivalent closed
    form ``|u|²∂x u - μ ∂x u - i P u``.  The two agree only with the momentum
    sign fixed in :mod:`spectral_core`.
    """
    N = field.n_max
    n_out = N if n_out is None else n_out
    if method == "auto":
        method = "triple" if N <= 16 else "identity"
    c, k = field.coeffs, field.freqs
    if method == "triple":
        u = field
        nr = trilinear_sum(u, u.conj_field(), u, mask=_nonresonant_mask, n_out=n_out)
        res = _pad(-1j * k * np.abs(c) ** 2 * c, N, n_out)
        return SpectralField(sign * (nr.coeffs + res), n_out, field.time)
    if method in ("identity", "direct", "fft"):
        inner = "auto" if method == "identity" else method
        base = cubic_coeffs(c, N, n_out, inner)
        corr = _pad(1j * k * c * mass(field) + 1j * momentum(field) * c, N, n_out)
        return SpectralField(sign * (base - corr), n_out, field.time)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# regions

def region_masks(n1, n2, n3, constants: RegionConstants = RegionConstants()) -> dict:
    """Literal membership masks of the four regions (non-resonant triples only)."""
    n1, n2, n3 = (np.asarray(v, dtype=np.int64) for v in (n1, n2, n3))
    M, C = constants.much_less_factor, constants.comparable_factor
    a1, a2, a3 = np.abs(n1), np.abs(n2), np.abs(n3)
    an = np.abs(n1 + n2 + n3)
    nonres = resonance_array(n1, n2, n3) != 0
    lo, hi = np.minimum(an, a1), np.maximum(an, a1)
    return {
        RegionLabel.A: nonres & (M * a2 <= a1),
        RegionLabel.B: nonres & (M * a3 <= lo) & (hi <= C * a2) & (a2 <= C * hi),
        RegionLabel.C: nonres & (an <= C * a3) & (M * a3 <= a1),
        RegionLabel.D: nonres & (a1 <= C * a3),
        RegionLabel.RESONANT: ~nonres,
    }


def assign_regions(n1, n2, n3, constants: RegionConstants = RegionConstants()) -> np.ndarray:
    """Integer region codes with priority A > B > C > D.

    0 = resonant, 1..4 = A..D; non-resonant triples outside every region go to D.
    """
    masks = region_masks(n1, n2, n3, constants)
    codes = np.full(masks[RegionLabel.A].shape, 4, dtype=np.int8)
    for label in (RegionLabel.C, RegionLabel.B, RegionLabel.A):
        codes[masks[label]] = _REGION_CODE[label]
    codes[masks[RegionLabel.RESONANT]] = 0
    return codes


def classify_region(triple: FrequencyTriple,
                    constants: RegionConstants = RegionConstants()) -> frozenset:
    """Every region whose defining inequalities hold for the triple."""
    masks = region_masks(triple.n1, triple.n2, triple.n3, constants)
    if masks[RegionLabel.RESONANT]:
        return frozenset({RegionLabel.RESONANT})
    return frozenset(label for label in REGION_ORDER if masks[label])


# ---------------------------------------------------------------------------
# trilinear sums

def _nonresonant_mask(n1, n2, n3):
    return resonance_array(n1, n2, n3) != 0


def trilinear_sum(u1: SpectralField, u2: SpectralField, u3: SpectralField,
                  mask=None, n_out: int | None = None) -> SpectralField:
    """Σ_{n1+n2+n3=n} i n1 û1(n1) û2(n2) û3(n3) over triples where ``mask`` holds.

    ``mask(n1, n2, n3)`` receives broadcast integer arrays.  Every output
    frequency accumulates its terms in a fixed order (bincount over the
    enumeration), so the result does not depend on how outputs are split.
    """
    N1, N2, N3 = u1.n_max, u2.n_max, u3.n_max
    if n_out is None:
        n_out = N1 + N2 + N3
    n1 = np.arange(-N1, N1 + 1)[:, None, None]
    n2 = np.arange(-N2, N2 + 1)[None, :, None]
    n3 = np.arange(-N3, N3 + 1)[None, None, :]
    vals = (1j * n1 * u1.coeffs[:, None, None]) * u2.coeffs[None, :, None] * u3.coeffs[None, None, :]
    n = n1 + n2 + n3
    keep = np.abs(n) <= n_out
    if mask is not None:
        keep = keep & mask(*np.broadcast_arrays(n1, n2, n3))
    n, vals = np.broadcast_to(n, keep.shape)[keep], vals[keep]
    idx = n + n_out
    size = 2 * n_out + 1
    out = (np.bincount(idx, weights=vals.real, minlength=size)
           + 1j * np.bincount(idx, weights=vals.imag, minlength=size))
    return SpectralField(out, n_out, u1.time)


def _order_mask(strict: bool):
    def mask(n1, n2, n3):
        return np.abs(n2) > np.abs(n3) if strict else np.abs(n2) >= np.abs(n3)
    return mask


def nonresonant_sum(u1, u2, u3, strict: bool = False, n_out: int | None = None) -> SpectralField:
    """NR_≥ (or NR_> when ``strict``) over all non-resonant triples."""
    order = _order_mask(strict)

    def mask(n1, n2, n3):
        return order(n1, n2, n3) & _nonresonant_mask(n1, n2, n3)
    return trilinear_sum(u1, u2, u3, mask=mask, n_out=n_out)


def nr_partial(u1, u2, u3, region: RegionLabel, strict: bool = False,
               constants: RegionConstants = RegionConstants(),
               n_out: int | None = None) -> SpectralField:
    """NR_≥ / NR_> restricted to the triples assigned to ``region``."""
    if region not in REGION_ORDER:
        raise ValueError("region must be one of A, B, C, D")
    order = _order_mask(strict)
    code = _REGION_CODE[region]

    def mask(n1, n2, n3):
        return order(n1, n2, n3) & (assign_regions(n1, n2, n3, constants) == code)
    return trilinear_sum(u1, u2, u3, mask=mask, n_out=n_out)


def resonant_R(u1: SpectralField, u2: SpectralField, u3: SpectralField,
               n_out: int | None = None) -> SpectralField:
    """R(u1,u2,u3)(n) = -i n û1(n) conj(û2(n)) û3(n)."""
    N = min(u1.n_max, u2.n_max, u3.n_max)
    n_out = N if n_out is None else n_out
    k = np.arange(-N, N + 1)
    c1, c2, c3 = (u.resized(N).coeffs for u in (u1, u2, u3))
    return SpectralField(_pad(-1j * k * c1 * np.conj(c2) * c3, N, n_out), n_out, u1.time)


def decompose_mkdv2(field: SpectralField, n_out: int | None = None) -> SpectralField:
    """NR_≥(u,ū,u) + NR_>(u,u,ū) + R(u,u,u)."""
    N = field.n_max
    n_out = 3 * N if n_out is None else n_out
    ubar = field.conj_field()
    total = (nonresonant_sum(field, ubar, field, strict=False, n_out=n_out).coeffs
             + nonresonant_sum(field, field, ubar, strict=True, n_out=n_out).coeffs
             + resonant_R(field, field, field, n_out=n_out).coeffs)
    return SpectralField(total, n_out, field.time)


# ---------------------------------------------------------------------------
# region lemma verification

@dataclass
class RegionLemmaReport:
    bound: int
    constants: RegionConstants
    triples_checked: int = 0
    nonresonant: int = 0
    region_counts: dict = field(default_factory=dict)
    assigned_counts: dict = field(default_factory=dict)
    uncovered: int = 0
    violations: dict = field(default_factory=dict)
    violation_examples: dict = field(default_factory=dict)
    c5: float = float("inf")
    c6: float = float("inf")
    c6_prime: float = 0.0

    @property
    def raw_coverage(self) -> float:
        return 1.0 if self.nonresonant == 0 else 1.0 - self.uncovered / self.nonresonant

    @property
    def assigned_coverage(self) -> float:
        if self.nonresonant == 0:
            return 1.0
        return sum(self.assigned_counts.values()) / self.nonresonant

    @property
    def passed(self) -> bool:
        return (all(self.violations.get(k, 0) == 0 for k in ("1", "2", "3", "4"))
                and np.isfinite(self.c5) and self.c5 > 0 and np.isfinite(self.c6)
                and self.c6 > 0 and np.isfinite(self.c6_prime)
                and self.assigned_coverage == 1.0)

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "much_less_factor": self.constants.much_less_factor,
            "comparable_factor": self.constants.comparable_factor,
            "triples_checked": self.triples_checked,
            "nonresonant": self.nonresonant,
            "region_counts": dict(self.region_counts),
            "assigned_counts": dict(self.assigned_counts),
            "uncovered_literal": self.uncovered,
            "raw_coverage": self.raw_coverage,
            "assigned_coverage": self.assigned_coverage,
            "violations": dict(self.violations),
            "violation_examples": {k: list(v) for k, v in self.violation_examples.items()},
            "c5": self.c5,
            "c6": self.c6,
            "c6_prime": self.c6_prime,
            "passed": self.passed,
        }


def lemma_conclusion_factors(constants: RegionConstants) -> dict:
    """Constants for which the region implications follow from the definitions.

    Each conclusion is derived from the region's hypotheses by the triangle
    inequality; the factors below are what that derivation yields.
    """
    M, C = constants.much_less_factor, constants.comparable_factor
    if M <= C + 2:
        raise ValueError("implication (3) needs much_less_factor > comparable_factor + 2")
    return {
        "1_sim": 1.0 / (1.0 - 2.0 / M),
        "2_lesssim": float(M),
        "2_sim": float(C * M),
        "3_ll": float(M - C - 1),
        "3_sim": 1.0 / (1.0 - (C + 1.0) / M),
    }


def _check_implications(n1, n2, n3, masks, constants, f):
    """Boolean violation masks of implications (1)-(4)."""
    M, C = constants.much_less_factor, constants.comparable_factor
    a1, a2, a3 = np.abs(n1), np.abs(n2), np.abs(n3)
    an = np.abs(n1 + n2 + n3)

    def ll(a, b, k=M):
        return k * a <= b

    def sim(a, b, k):
        return (a <= k * b) & (b <= k * a)

    ok1 = (a3 <= a2) & ll(a2, a1) & sim(a1, an, f["1_sim"])
    alt1 = ll(a3, an) & (an <= f["2_lesssim"] * a1) & sim(a1, a2, f["2_sim"])
    alt2 = ll(a3, a1) & ll(a1, an) & sim(an, a2, f["2_sim"])
    ok2 = alt1 | alt2
    ok3 = (an <= C * a3) & ll(a3, a2, f["3_ll"]) & sim(a2, a1, f["3_sim"])
    ok4 = (a1 <= C * a3) & (a3 <= a2)
    return {
        "1": masks[RegionLabel.A] & ~ok1,
        "2": masks[RegionLabel.B] & ~ok2,
        "3": masks[RegionLabel.C] & ~ok3,
        "4": masks[RegionLabel.D] & ~ok4,
    }


def verify_region_lemma(bound: int, constants: RegionConstants = RegionConstants(),
                        max_examples: int = 5) -> RegionLemmaReport:
    """Exhaustively check the region implications for |n_j| ≤ bound, |n2| ≥ |n3|."""
    if not 0 < bound <= 512:
        raise ValueError("bound must satisfy 0 < bound <= 512")
    f = lemma_conclusion_factors(constants)
    rep = RegionLemmaReport(bound=bound, constants=constants)
    rep.region_counts = {lab.value: 0 for lab in REGION_ORDER}
    rep.assigned_counts = {lab.value: 0 for lab in REGION_ORDER}
    rep.violations = {k: 0 for k in ("1", "2", "3", "4")}
    rep.violation_examples = {k: [] for k in ("1", "2", "3", "4")}
    r = np.arange(-bound, bound + 1, dtype=np.int64)
    N2, N3 = np.meshgrid(r, r, indexing="ij")
    keep = np.abs(N2) >= np.abs(N3)
    n2, n3 = N2[keep], N3[keep]
    for v in r:
        n1 = np.full_like(n2, v)
        masks = region_masks(n1, n2, n3, constants)
        nonres = ~masks[RegionLabel.RESONANT]
        rep.triples_checked += n1.size
        rep.nonresonant += int(nonres.sum())
        covered = np.zeros_like(nonres)
        for lab in REGION_ORDER:
            rep.region_counts[lab.value] += int(masks[lab].sum())
            covered |= masks[lab]
        rep.uncovered += int((nonres & ~covered).sum())
        codes = assign_regions(n1, n2, n3, constants)
        for lab in REGION_ORDER:
            rep.assigned_counts[lab.value] += int((codes == _REGION_CODE[lab]).sum())
        for key, bad in _check_implications(n1, n2, n3, masks, constants, f).items():
            cnt = int(bad.sum())
            if cnt:
                rep.violations[key] += cnt
                ex = rep.violation_examples[key]
                for i in np.flatnonzero(bad)[:max(0, max_examples - len(ex))]:
                    ex.append((int(n1[i]), int(n2[i]), int(n3[i])))
        phi = np.abs(resonance_array(n1, n2, n3)).astype(float)
        abc = masks[RegionLabel.A] | masks[RegionLabel.B] | masks[RegionLabel.C]
        if abc.any():
            big = np.maximum(np.abs(n1), np.abs(n2))[abc].astype(float)
            rep.c5 = min(rep.c5, float(np.min(phi[abc] / big ** 2)))
        d = masks[RegionLabel.D]
        if d.any():
            rep.c6 = min(rep.c6, float(np.min(phi[d] / np.abs(n2[d]))))
            nn = (n1 + n2 + n3)[d]
            lhs = np.sqrt(japanese(nn)) * np.abs(n1[d])
            rhs = np.sqrt(japanese(n1[d]) * japanese(n2[d]) * japanese(n3[d]))
            rep.c6_prime = max(rep.c6_prime, float(np.max(lhs / rhs)))
    return rep
