"""Time cutoffs, principal-value Hilbert transforms and the Duhamel kernels.

Time transforms use f̂(τ) = (1/2π) ∫ f(t) e^{-itτ} dt and the Hilbert
transform is Hf(ξ) = pv ∫ f(ξ-μ)/μ dμ (no 1/π factor).

Kernels, as functions of the shifted modulations (τ, λ) and the resonance Φ:

* ``K(τ,λ) = -i ∫ φ̂(μ-λ) (φ̂(τ-μ) - φ̂(τ))/μ dμ`` (plain Duhamel operator),
* ``K_G(τ,λ,Φ) = ∫ φ̂(τ-μ) [φ̂(μ-λ) Φ⁻¹ Hη̂(μ/Φ) + Hφ̂(μ-λ) |Φ|⁻¹ η̂(μ/Φ)] dμ``,
* ``K_B = iK - K_G`` (so that K_G + K_B = iK, the η-independent total).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

_SQRT_PI = math.sqrt(math.pi)
# Beyond this modulation φ̂ is below 1e-17 and the fixed Gauss rule stops
# resolving the oscillation; values there are returned as their asymptotics.
PHI_HAT_CUTOFF = 2000.0
_GL_NODES = 1024
# Integrands built from φ̂ are negligible (< 1e-12) this far from their centres.
KERNEL_WINDOW = 200.0


class QuadratureWarning(UserWarning):
    """An adaptive quadrature did not reach its tolerance."""


# ---------------------------------------------------------------------------
# cutoffs

def _psi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def phi_eval(t):
    """Smooth cutoff: 1 on [-1, 1], 0 outside [-2, 2]."""
    t = np.abs(np.asarray(t, dtype=float))
    a, b = _psi(2.0 - t), _psi(t - 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = a / (a + b)
    out = np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, out))
    return out if out.ndim else float(out)


def phi_prime(t):
    """dφ/dt for t in (1, 2) (and its mirror image), 0 elsewhere."""
    t = np.asarray(t, dtype=float)
    s = np.abs(t)
    inside = (s > 1.0) & (s < 2.0)
    out = np.zeros_like(s)
    x = s[inside]
    a, b = _psi(2.0 - x), _psi(x - 1.0)
    out[inside] = -a * b * (1.0 / (2.0 - x) ** 2 + 1.0 / (x - 1.0) ** 2) / (a + b) ** 2
    out = out * np.sign(t)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _gauss(nodes: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _transition_rule():
    x, w = _gauss(_GL_NODES, 1.0, 2.0)
    return x, w, phi_eval(x), phi_prime(x)


_TRANSITION = None


def _rule():
    global _TRANSITION
    if _TRANSITION is None:
        _TRANSITION = _transition_rule()
    return _TRANSITION


def _blocked(fn, xi, block=4096):
    xi = np.asarray(xi, dtype=float)
    flat = xi.reshape(-1)
    out = np.empty(flat.shape, dtype=float)
    for i in range(0, flat.size, block):
        out[i:i + block] = fn(flat[i:i + block])
    return out.reshape(xi.shape) if xi.ndim else float(out[0])


def _phi_hat_block(xi):
    x, w, ph, dph = _rule()
    out = np.zeros_like(xi)
    small = np.abs(xi) < 1.0
    mid = (~small) & (np.abs(xi) <= PHI_HAT_CUTOFF)
    if small.any():
        z = xi[small]
        core = np.sinc(z / np.pi)  # sin(z)/z
        out[small] = (core + np.cos(np.outer(z, x)) @ (w * ph)) / np.pi
    if mid.any():
        z = xi[mid]
        out[mid] = -(np.sin(np.outer(z, x)) @ (w * dph)) / (np.pi * z)
    return out


def phi_hat(xi):
    """φ̂(ξ) = (1/π) ∫₀² φ(t) cos(ξt) dt (φ is even, so φ̂ is real and even).

    Uses a 1024-point Gauss-Legendre rule on the transition interval [1, 2]
    (on [0, 1] the integral is sin ξ / ξ).  For |ξ| ≥ 1 the integral is
    rewritten by parts as -(1/πξ) ∫₁² φ'(t) sin(ξt) dt, which avoids the
    cancellation between the two pieces.
    """
    return _blocked(_phi_hat_block, xi)


def _phi_hat_prime_block(xi):
    # d/dξ (1/π)∫₀² φ cos(ξt) dt = -(1/π)∫₀² t φ(t) sin(ξt) dt
    x, w, ph, _ = _rule()
    x0, w0 = _gauss(64, 0.0, 1.0)
    return -(np.sin(np.outer(xi, x0)) @ (w0 * x0) + np.sin(np.outer(xi, x)) @ (w * x * ph)) / np.pi


def phi_hat_prime(xi):
    """dφ̂/dξ, for moderate |ξ| (≤ 60)."""
    return _blocked(_phi_hat_prime_block, xi)


def _hilbert_phi_hat_block(xi):
    x, w, ph, dph = _rule()
    out = np.zeros_like(xi)
    small = np.abs(xi) < 1.0
    mid = (~small) & (np.abs(xi) <= PHI_HAT_CUTOFF)
    far = np.abs(xi) > PHI_HAT_CUTOFF
    if small.any():
        z = xi[small]
        head = np.where(z == 0, 0.0, 2.0 * np.sin(z / 2) ** 2 / np.where(z == 0, 1.0, z))
        out[small] = head + np.sin(np.outer(z, x)) @ (w * ph)
    if mid.any():
        z = xi[mid]
        out[mid] = (1.0 + np.cos(np.outer(z, x)) @ (w * dph)) / z
    out[far] = 1.0 / xi[far]
    return out


def hilbert_phi_hat(xi):
    """Hφ̂(ξ) = ∫₀² φ(t) sin(ξt) dt, which decays like 1/ξ.

    Follows from pv ∫ e^{iμt}/μ dμ = iπ sgn(t); checked against
    :func:`hilbert_pv` in the tests.
    """
    return _blocked(_hilbert_phi_hat_block, xi)


def phi_hat_adaptive(xi: float) -> float:
    """φ̂(ξ) by adaptive oscillatory quadrature (QAWO); reference path."""
    xi = float(xi)
    if xi == 0:
        val, _ = integrate.quad(phi_eval, 0.0, 2.0, epsabs=1e-15, epsrel=1e-13, limit=200)
        return val / math.pi
    v1 = math.sin(xi) / xi
    v2, _ = integrate.quad(phi_eval, 1.0, 2.0, weight="cos", wvar=xi,
                           epsabs=1e-16, epsrel=1e-13, limit=400)
    return (v1 + v2) / math.pi


def eta_hat(xi):
    """η̂(ξ) = (ξ+1) e^{-(ξ+1)²} / √π: η̂(-1) = 0 and Hη̂(-1) = -1."""
    z = np.asarray(xi, dtype=float) + 1.0
    out = z * np.exp(-z * z) / _SQRT_PI
    return out if out.ndim else float(out)


def hilbert_eta_hat(xi):
    """Hη̂(ξ) = 2(ξ+1) F(ξ+1) - 1, F the Dawson function."""
    z = np.asarray(xi, dtype=float) + 1.0
    out = 2.0 * z * special.dawsn(z) - 1.0
    return out if out.ndim else float(out)


def eta_time(t):
    """η(t) = ∫ η̂(ξ) e^{itξ} dξ = (it/2) e^{-t²/4} e^{-it}."""
    t = np.asarray(t, dtype=float)
    out = 0.5j * t * np.exp(-0.25 * t * t - 1j * t)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class CutoffPair:
    """The time cutoff φ and the resonance cutoff η with their transforms."""

    def phi(self, t):
        return phi_eval(t)

    def phi_hat(self, xi):
        return phi_hat(xi)

    def hilbert_phi_hat(self, xi):
        return hilbert_phi_hat(xi)

    def eta(self, t):
        return eta_time(t)

    def eta_hat(self, xi):
        return eta_hat(xi)

    def hilbert_eta_hat(self, xi):
        return hilbert_eta_hat(xi)


# ---------------------------------------------------------------------------
# principal value

def hilbert_pv(f: Callable[[float], float], xi: float, exclusion: float = 1.0,
               tail: float = 50.0, tol: float = 1e-11, full_output: bool = False):
    """pv ∫ f(ξ-μ)/μ dμ for smooth, rapidly decaying ``f``.

    On |μ| ≤ exclusion the singular part is removed analytically:
    ∫ (f(ξ-μ) - f(ξ))/μ dμ is a regular integral.  Outside, the odd
    symmetrization ∫ (f(ξ-μ) - f(ξ+μ))/μ dμ over μ > exclusion is integrated
    adaptively with a breakpoint at μ = |ξ| (where the mass of f sits).
    Returns the value, or ``(value, error_estimate)`` with ``full_output``.
    A :class:`QuadratureWarning` is raised when the estimate exceeds ``tol``.
    """
    if exclusion <= 0:
        raise ValueError("exclusion must be positive")
    xi = float(xi)
    f0 = f(xi)

    def inner(mu):
        if mu == 0:
            return 0.0
        return (f(xi - mu) - f0) / mu

    def outer(mu):
        return (f(xi - mu) - f(xi + mu)) / mu

    v1, e1 = integrate.quad(inner, -exclusion, exclusion, points=[0.0],
                            epsabs=tol / 10, epsrel=1e-12, limit=400)
    mid = max(abs(xi), exclusion) + tail
    pts = [abs(xi)] if exclusion < abs(xi) < mid else None
    v2, e2 = integrate.quad(outer, exclusion, mid, points=pts,
                            epsabs=tol / 10, epsrel=1e-12, limit=400)
    v3, e3 = integrate.quad(outer, mid, np.inf, epsabs=tol / 10, epsrel=1e-12, limit=400)
    val, err = v1 + v2 + v3, e1 + e2 + e3
    if not np.isfinite(val) or err > tol:
        warnings.warn(f"hilbert_pv at xi={xi}: error estimate {err:.2e} exceeds {tol:.1e}",
                      QuadratureWarning, stacklevel=2)
    return (val, err) if full_output else val


# ---------------------------------------------------------------------------
# scalar kernels (adaptive quadrature; the reference path)

def _quad(fn, lo, hi, points=(), tol=1e-12):
    pts = sorted({p for p in points if lo < p < hi})
    val, err = integrate.quad(fn, lo, hi, points=pts or None, epsabs=tol, epsrel=1e-11,
                              limit=2000)
    if err > 1e-9:
        warnings.warn(f"kernel quadrature error estimate {err:.2e} exceeds 1e-9",
                      QuadratureWarning, stacklevel=3)
    return val


def _fs(x):
    return float(phi_hat(x))


def _i_kernel(tau: float, lam: float) -> float:
    """∫ φ̂(μ-λ)(φ̂(τ-μ) - φ̂(τ))/μ dμ (= iK, real)."""
    ft = _fs(tau)

    def g(mu):
        if mu == 0:
            return float(-phi_hat_prime(tau)) * _fs(-lam)
        return _fs(mu - lam) * (_fs(tau - mu) - ft) / mu
    lo = min(tau, lam, 0.0) - KERNEL_WINDOW
    hi = max(tau, lam, 0.0) + KERNEL_WINDOW
    return _quad(g, lo, hi, points=(tau, lam, 0.0, -1.0, 1.0))


def kernel_K(tau: float, lam: float) -> complex:
    """K(τ, λ) = -i ∫ φ̂(μ-λ)(φ̂(τ-μ) - φ̂(τ))/μ dμ."""
    return -1j * _i_kernel(float(tau), float(lam))


def _check_phi(Phi):
    if Phi == 0:
        raise ValueError("Φ must be nonzero")
    return float(Phi)


def _kg_terms(tau, lam, Phi):
    inv, ainv = 1.0 / Phi, 1.0 / abs(Phi)

    def g1(mu):
        return _fs(tau - mu) * _fs(mu - lam) * inv * float(hilbert_eta_hat(mu * inv))

    def g2(mu):
        return _fs(tau - mu) * float(hilbert_phi_hat(mu - lam)) * ainv * float(eta_hat(mu * inv))
    lo, hi = tau - KERNEL_WINDOW, tau + KERNEL_WINDOW
    pts = (tau, lam, -Phi, 0.0)
    return _quad(g1, lo, hi, pts), _quad(g2, lo, hi, pts)


def kernel_KG(tau: float, lam: float, Phi: int) -> complex:
    Phi = _check_phi(Phi)
    a, b = _kg_terms(float(tau), float(lam), Phi)
    return complex(a + b)


def kernel_KB(tau: float, lam: float, Phi: int) -> complex:
    """K_B = iK - K_G."""
    Phi = _check_phi(Phi)
    return complex(_i_kernel(float(tau), float(lam)) - kernel_KG(tau, lam, Phi).real)


def kernel_KB_expanded(tau: float, lam: float, Phi: int, panels: int = 400,
                       nodes: int = 16) -> complex:
    """K_B from its three-integral expansion, by composite Gauss-Legendre.

    ∫ (φ̂(τ-μ)-φ̂(τ))/μ φ̂(μ-λ) dμ - ∫ φ̂(τ-μ)φ̂(μ-λ) Φ⁻¹Hη̂(μ/Φ) dμ
    - ∫ φ̂(τ-μ) Hφ̂(μ-λ) |Φ|⁻¹ η̂(μ/Φ) dμ.  A fixed composite rule,
    independent of the adaptive path used by :func:`kernel_KB`.
    """
    Phi = _check_phi(Phi)
    tau, lam = float(tau), float(lam)
    lo = min(tau, lam, 0.0) - KERNEL_WINDOW
    hi = max(tau, lam, 0.0) + KERNEL_WINDOW
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1), [0.0]]))
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    mu = (0.5 * (b - a) * x0 + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * w0).ravel()
    ft = phi_hat(tau)
    p_tm, p_ml = phi_hat(tau - mu), phi_hat(mu - lam)
    first = (p_tm - ft) / mu * p_ml
    second = p_tm * p_ml * hilbert_eta_hat(mu / Phi) / Phi
    third = p_tm * hilbert_phi_hat(mu - lam) * eta_hat(mu / Phi) / abs(Phi)
    return complex(np.dot(w, first - second - third))


def kb_pieces(tau: float, lam: float, Phi: int) -> dict:
    """The five pieces I1..I5 of K_B (localized near/away from μ = 0), adaptively."""
    Phi = _check_phi(Phi)
    tau, lam = float(tau), float(lam)
    ft = _fs(tau)
    inv, ainv = 1.0 / Phi, 1.0 / abs(Phi)

    def i1(mu):
        if mu == 0:
            return float(-phi_hat_prime(tau)) * _fs(-lam)
        return (_fs(tau - mu) - ft) * _fs(mu - lam) / mu

    def i2(mu):
        return -_fs(tau - mu) * _fs(mu - lam) * inv * float(hilbert_eta_hat(mu * inv))

    def i3(mu):
        return _fs(tau - mu) * _fs(mu - lam) * (1.0 / mu - inv * float(hilbert_eta_hat(mu * inv)))

    def i4(mu):
        return -_fs(tau - mu) * float(hilbert_phi_hat(mu - lam)) * ainv * float(eta_hat(mu * inv))

    def i5(mu):
        return _fs(mu - lam) / mu

    W = KERNEL_WINDOW
    pts = (tau, lam, -Phi)
    I1 = _quad(i1, -1.0, 1.0, (0.0,))
    I2 = _quad(i2, -1.0, 1.0, (0.0,))
    I3 = (_quad(i3, min(tau - W, -1.0), -1.0, pts) if tau - W < -1 else 0.0) \
        + (_quad(i3, 1.0, max(tau + W, 1.0), pts) if tau + W > 1 else 0.0)
    I4 = _quad(i4, tau - W, tau + W, pts + (0.0,))
    I5 = -ft * ((_quad(i5, min(lam - W, -1.0), -1.0, (lam,)) if lam - W < -1 else 0.0)
                + (_quad(i5, 1.0, max(lam + W, 1.0), (lam,)) if lam + W > 1 else 0.0))
    return {"I1": I1, "I2": I2, "I3": I3, "I4": I4, "I5": I5}


def _indicators(tau, lam, Phi):
    jl, jp = np.hypot(1.0, lam), np.hypot(1.0, Phi)
    jtl = np.hypot(1.0, tau - lam)
    return (jl >= jp,
            np.hypot(1.0, lam + Phi) <= jtl,
            np.hypot(1.0, tau + Phi) <= jtl)


def combine_split(pieces: dict, tau, lam, Phi):
    """(K₀, K₊) from the pieces; every piece lands in exactly one of the two.

    I2 carries no indicator and is bounded like the K₀ terms, so it is
    assigned to K₀.
    """
    low, mid, high = _indicators(tau, lam, Phi)
    a = pieces["I1"] + pieces["I5"]
    k0 = np.where(low, a, 0.0) + np.where(mid, pieces["I3"], 0.0) \
        + np.where(high, pieces["I4"], 0.0) + pieces["I2"]
    kp = np.where(low, 0.0, a) + np.where(mid, 0.0, pieces["I3"]) + np.where(high, 0.0, pieces["I4"])
    return k0, kp


def split_K0_Kplus(tau: float, lam: float, Phi: int) -> tuple[complex, complex]:
    """(K₀, K₊) with K₀ + K₊ = K_B (indicator thresholds at ratio 1)."""
    Phi = _check_phi(Phi)
    k0, kp = combine_split(kb_pieces(tau, lam, Phi), float(tau), float(lam), Phi)
    return complex(k0), complex(kp)


# ---------------------------------------------------------------------------
# bounds

def jb(x):
    return np.hypot(1.0, np.asarray(x, dtype=float))


def bound_K(tau, lam, Phi=None):
    return 1.0 / (jb(tau) * jb(tau - lam))


def bound_KG(tau, lam, Phi):
    return np.minimum(1.0 / jb(Phi), 1.0 / jb(tau)) / jb(tau - lam)


def bound_KB(tau, lam, Phi, alpha: float = 2.0):
    jt, jl, jp, jtl = jb(tau), jb(lam), jb(Phi), jb(tau - lam)
    return (1.0 / (jt ** alpha * jl)
            + jb(lam + Phi) / (jtl ** alpha * jl) * np.minimum(1.0 / jp, 1.0 / jl)
            + jb(tau + Phi) / jtl * np.minimum(1.0 / jp, 1.0 / jt) ** 2)


def bound_K0(tau, lam, Phi, alpha: float = 0.5):
    return 1.0 / (jb(tau) ** (1.0 + alpha) * jb(Phi) ** (1.0 - alpha))


def bound_Kplus(tau, lam, Phi, alpha: float = 0.5):
    jt, jl, jp, jtl = jb(tau), jb(lam), jb(Phi), jb(tau - lam)
    first = np.where(jl < jp, 1.0 / (jtl * jt), 0.0)
    return first + jb(lam + Phi) ** (1.0 - alpha) / (jtl * jt) \
        * np.minimum(1.0 / jp, 1.0 / jt) ** (1.0 - alpha)


# ---------------------------------------------------------------------------
# grid evaluation

def _lattice_values(fn, lo: float, hi: float, h: float):
    """fn on the lattice hZ ∩ [lo, hi]; returns (values, index of lo)."""
    i_lo, i_hi = math.floor(lo / h + 1e-9), math.ceil(hi / h - 1e-9)
    grid = np.arange(i_lo, i_hi + 1) * h
    return fn(grid), i_lo


def _on_lattice(x, h):
    k = np.round(np.asarray(x) / h)
    if not np.allclose(k * h, x, rtol=0, atol=1e-9):
        raise ValueError(f"grid values must be multiples of the quadrature step {h}")
    return k.astype(np.int64)


def kernel_grid(taus, lams, Phi: int, h: float = 0.125, window: float = KERNEL_WINDOW,
                gauss_nodes: int = 48) -> dict:
    """All kernels on the tensor grid taus × lams for one Φ.

    The μ-integrals over the whole line are trapezoid sums on the lattice hZ;
    every integrand is a product of transforms of functions supported in
    |t| ≤ 2 (or Gaussian-decaying), so the lattice sum converges spectrally.
    The pieces on |μ| ≤ 1 use Gauss-Legendre.  I3 and I4 are obtained from the
    whole-line sums so that I1 + ... + I5 = iK - K_G holds to rounding.
    Returns arrays indexed [tau, lam] for K, KG, KB, K0, Kplus and I1..I5.
    """
    Phi = _check_phi(Phi)
    taus = np.asarray(taus, dtype=float)
    lams = np.asarray(lams, dtype=float)
    it, il = _on_lattice(taus, h), _on_lattice(lams, h)
    lo = min(taus.min(), lams.min(), 0.0) - window
    hi = max(taus.max(), lams.max(), 0.0) + window
    jm_lo, jm_hi = math.floor(lo / h), math.ceil(hi / h)
    jm = np.arange(jm_lo, jm_hi + 1)
    mu = jm * h
    # tables on the lattice for differences τ-μ and μ-λ
    d1 = it[:, None] - jm[None, :]
    d2 = jm[:, None] - il[None, :]
    dmin, dmax = min(d1.min(), d2.min()), max(d1.max(), d2.max())
    table_idx = np.arange(dmin, dmax + 1)
    ph_tab = phi_hat(table_idx * h)
    hp_tab = hilbert_phi_hat(table_idx * h)
    A = ph_tab[d1 - dmin]            # φ̂(τ-μ)
    B1 = ph_tab[d2 - dmin]           # φ̂(μ-λ)
    H1 = hp_tab[d2 - dmin]           # Hφ̂(μ-λ)
    ft = phi_hat(taus)
    # (φ̂(τ-μ) - φ̂(τ))/μ with its limit at μ = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        Kd = (A - ft[:, None]) / mu[None, :]
    zero = np.flatnonzero(jm == 0)
    if zero.size:
        Kd[:, zero[0]] = -phi_hat_prime(taus)
    c1 = hilbert_eta_hat(mu / Phi) / Phi
    c2 = eta_hat(mu / Phi) / abs(Phi)
    iK = h * (Kd @ B1)
    G1 = h * (A @ (c1[:, None] * B1))
    G2 = h * (A @ (c2[:, None] * H1))
    # pieces near μ = 0
    xg, wg = _gauss(gauss_nodes, -1.0, 1.0)
    Ag = phi_hat(taus[:, None] - xg[None, :])
    Bg = phi_hat(xg[:, None] - lams[None, :])
    I1 = ((Ag - ft[:, None]) / xg[None, :] * wg[None, :]) @ Bg
    I2 = -((Ag * wg[None, :] * (hilbert_eta_hat(xg / Phi) / Phi)[None, :]) @ Bg)
    xp, wp = _gauss(gauss_nodes, 0.0, 1.0)
    inner_pv = ((phi_hat(xp[:, None] - lams[None, :]) - phi_hat(-xp[:, None] - lams[None, :]))
                / xp[:, None] * wp[:, None]).sum(axis=0)
    outer_pv = hilbert_phi_hat(lams) - inner_pv      # ∫_{|μ|>1} φ̂(μ-λ)/μ dμ
    I5 = -ft[:, None] * outer_pv[None, :]
    I3 = (iK - I1 - I5) - (G1 + I2)
    I4 = -G2
    KG = G1 + G2
    KB = iK - KG
    T, L = np.meshgrid(taus, lams, indexing="ij")
    pieces = {"I1": I1, "I2": I2, "I3": I3, "I4": I4, "I5": I5}
    K0, Kp = combine_split(pieces, T, L, Phi)
    out = {"K": -1j * iK, "KG": KG.astype(complex), "KB": KB.astype(complex),
           "K0": K0.astype(complex), "Kplus": Kp.astype(complex)}
    out.update(pieces)
    return out


BOUNDS = {
    "K": bound_K,
    "KG": bound_KG,
    "KB": bound_KB,
    "K0": bound_K0,
    "Kplus": bound_Kplus,
}


@dataclass
class KernelGrid:
    """One kernel on a (τ, λ) grid for fixed Φ, with its bound sweep."""

    name: str
    taus: np.ndarray
    lams: np.ndarray
    Phi: int
    values: np.ndarray
    bound: np.ndarray
    alpha: float | None = None

    @property
    def ratio(self) -> np.ndarray:
        return np.abs(self.values) / self.bound

    @property
    def constant(self) -> float:
        return float(np.max(self.ratio))

    @property
    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.ratio), self.ratio.shape)
        return float(self.taus[i]), float(self.lams[j])

    def rows(self):
        T, L = np.meshgrid(self.taus, self.lams, indexing="ij")
        r = self.ratio
        for a, b, v, bd, q in zip(T.ravel(), L.ravel(), self.values.ravel(),
                                  self.bound.ravel(), r.ravel()):
            yield (float(a), float(b), int(self.Phi), float(v.real), float(v.imag),
                   float(bd), float(q))


DEFAULT_ALPHAS = {"KB": 2.0, "K0": 0.5, "Kplus": 0.5}


def sweep_kernels(extent: float = 50.0, step: float = 1.0, phis=(6, -6, 24, -24, 96, -96, 960, -960),
                  alphas: dict | None = None, h: float = 0.125) -> dict:
    """Evaluate every kernel and bound on [-extent, extent]² for each Φ.

    Returns ``{(name, Phi): KernelGrid}``.
    """
    alphas = {**DEFAULT_ALPHAS, **(alphas or {})}
    n = int(round(extent / step))
    grid = np.arange(-n, n + 1) * step
    out = {}
    T, L = np.meshgrid(grid, grid, indexing="ij")
    for Phi in phis:
        vals = kernel_grid(grid, grid, Phi, h=h)
        for name, bound_fn in BOUNDS.items():
            a = alphas.get(name)
            bd = bound_fn(T, L, Phi) if a is None else bound_fn(T, L, Phi, a)
            out[(name, int(Phi))] = KernelGrid(name, grid, grid, int(Phi), vals[name], bd, a)
    return out


@dataclass
class SweepStability:
    name: str
    Phi: int
    coarse: float
    fine: float
    location: tuple

    @property
    def relative_change(self) -> float:
        return abs(self.fine - self.coarse) / self.coarse if self.coarse > 0 else 0.0

    @property
    def passed(self) -> bool:
        return (np.isfinite(self.coarse) and np.isfinite(self.fine)
                and self.relative_change <= 0.10)


def sweep_stability(extent: float = 50.0, step: float = 1.0, phis=(6, -6, 24, -24, 96, -96, 960, -960),
                    alphas: dict | None = None, h: float = 0.125) -> list[SweepStability]:
    """Empirical constants at ``step`` and ``step/2``; PASS within ±10%."""
    coarse = sweep_kernels(extent, step, phis, alphas, h)
    fine = sweep_kernels(extent, step / 2, phis, alphas, h)
    return [SweepStability(name, Phi, coarse[(name, Phi)].constant, fine[(name, Phi)].constant,
                           fine[(name, Phi)].argmax)
            for (name, Phi) in coarse]
