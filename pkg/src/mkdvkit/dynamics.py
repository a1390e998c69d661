"""Time integration, gauge maps, Duhamel residuals, Picard iteration and the
modified Duhamel operators G and B."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._numerics import cumulative_simpson_complex
from .kernels import CutoffPair
from .nonlinearity import (RegionConstants, RegionLabel, assign_regions,
                           cubic_coeffs, _REGION_CODE)
from .spectral_core import MOMENTUM_SIGN, SpectralField, fl_norm, mass, momentum

BLOWUP_THRESHOLD = 1e12
MAX_DT = 0.1


class ResolutionWarning(UserWarning):
    """A quadrature or grid is too coarse for the requested accuracy."""


class BlowUpError(RuntimeError):
    """Raised when a coefficient exceeds the blow-up threshold."""

    def __init__(self, message, time=None, step=None, model=None, n_max=None):
        super().__init__(message)
        self.time, self.step, self.model, self.n_max = time, step, model, n_max


class Model(enum.Enum):
    MKDV = "MKDV"
    MKDV1 = "MKDV1"
    MKDV2 = "MKDV2"
    LINEAR = "LINEAR"


@dataclass(frozen=True)
class ModelKind:
    """Equation tag and the sign of the nonlinearity.

    ``LINEAR`` switches the nonlinearity off; it is the control case for the
    integrator and the Lipschitz probe.
    """

    tag: Model = Model.MKDV
    sign: int = 1

    def __post_init__(self):
        if isinstance(self.tag, str):
            object.__setattr__(self, "tag", Model(self.tag.upper()))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __str__(self):
        return f"{self.tag.value}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    n_max: int = 32
    method: str = "IFRK4"
    record_every: int = 1
    nonlinearity_method: str = "auto"
    blowup_threshold: float = BLOWUP_THRESHOLD

    def __post_init__(self):
        if not 0 < self.dt <= MAX_DT:
            raise ValueError(f"dt must lie in (0, {MAX_DT}]")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.method != "IFRK4":
            raise ValueError("only the IFRK4 method is available")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one run: ``coeffs[i]`` is the field at ``times[i]``."""

    times: np.ndarray
    coeffs: np.ndarray
    model: ModelKind
    n_max: int
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (t.size, 2 * self.n_max + 1):
            raise ValueError("coeffs must have shape (len(times), 2*n_max+1)")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.times.size

    def __getitem__(self, i) -> SpectralField:
        return SpectralField(self.coeffs[i], self.n_max, self.times[i])

    @property
    def states(self) -> list[SpectralField]:
        return [self[i] for i in range(len(self))]

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def with_coeffs(self, coeffs, model: ModelKind | None = None) -> "Trajectory":
        return Trajectory(self.times, coeffs, model or self.model, self.n_max, dict(self.metadata))

    def to_jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.states)

    @classmethod
    def from_jsonl(cls, text: str, model: ModelKind = ModelKind()) -> "Trajectory":
        states = [SpectralField.from_json(line) for line in text.splitlines() if line.strip()]
        if not states:
            raise ValueError("empty trajectory")
        n = max(s.n_max for s in states)
        return cls(np.array([s.time for s in states], dtype=float),
                   np.array([s.resized(n).coeffs for s in states]), model, n)


# ---------------------------------------------------------------------------
# linear flow and model nonlinearities

def linear_propagate(field: SpectralField, t: float) -> SpectralField:
    """S(t): û(n) ↦ e^{itn³} û(n)."""
    k = field.freqs.astype(float)
    return SpectralField(np.exp(1j * t * k ** 3) * field.coeffs, field.n_max, field.time)


def _model_rhs(model: ModelKind, c: np.ndarray, N: int, k: np.ndarray,
               method: str = "auto") -> np.ndarray:
    tag = model.tag
    if tag is Model.LINEAR:
        return np.zeros_like(c)
    out = cubic_coeffs(c, N, N, method)
    if tag is Model.MKDV:
        return model.sign * out
    abs2 = c.real ** 2 + c.imag ** 2
    out = out - 1j * k * c * abs2.sum()
    if tag is Model.MKDV2:
        out = out - 1j * (MOMENTUM_SIGN * np.dot(k, abs2)) * c
    return model.sign * out


def model_nonlinearity(field: SpectralField, model: ModelKind, method: str = "auto") -> SpectralField:
    """The nonlinearity of ``model`` on the Galerkin truncation |n| ≤ n_max."""
    return SpectralField(_model_rhs(model, field.coeffs, field.n_max, field.freqs, method),
                         field.n_max, field.time)


def evolve(u0: SpectralField, model: ModelKind, cfg: IntegratorConfig) -> Trajectory:
    """Integrating-factor RK4 for ∂t û = i n³ û + N(u) on |n| ≤ cfg.n_max.

    The stepper advances v = e^{-itn³} û, so the linear flow is exact.
    """
    if u0.n_max > cfg.n_max:
        raise ValueError("u0.n_max exceeds cfg.n_max")
    N = cfg.n_max
    k = np.arange(-N, N + 1)
    k3 = k.astype(float) ** 3
    t0 = 0.0 if u0.time is None else float(u0.time)
    span = float(cfg.t_end) - t0
    n_steps = max(1, math.ceil(abs(span) / cfg.dt - 1e-9)) if span != 0 else 0
    h = span / n_steps if n_steps else 0.0

    def f(t, v):
        e = np.exp(1j * t * k3)
        return np.conj(e) * _model_rhs(model, e * v, N, k, cfg.nonlinearity_method)

    v = u0.resized(N).coeffs.copy()
    times, states = [t0], [v.copy()]
    for step in range(1, n_steps + 1):
        t = t0 + (step - 1) * h
        k1 = f(t, v)
        k2 = f(t + h / 2, v + (h / 2) * k1)
        k3_ = f(t + h / 2, v + (h / 2) * k2)
        k4 = f(t + h, v + h * k3_)
        v = v + (h / 6) * (k1 + 2 * k2 + 2 * k3_ + k4)
        amp = np.abs(v).max()
        if not np.isfinite(amp) or amp > cfg.blowup_threshold:
            raise BlowUpError(f"blow-up for {model} at t={t + h:.6g} (step {step}, n_max={N})",
                              time=t + h, step=step, model=model, n_max=N)
        if step % cfg.record_every == 0 or step == n_steps:
            times.append(t0 + step * h)
            states.append(v.copy())
    times = np.array(times)
    if h < 0:
        times, states = times[::-1], states[::-1]
    coeffs = np.exp(1j * np.outer(times, k3)) * np.array(states)
    meta = {"dt": abs(h), "steps": n_steps, "blowup_threshold": cfg.blowup_threshold,
            "method": cfg.method, "model": str(model)}
    return Trajectory(times, coeffs, model, N, meta)


# ---------------------------------------------------------------------------
# gauge maps

def _require(traj: Trajectory, tag: Model):
    if traj.model.tag is not tag:
        raise ValueError(f"expected a {tag.value} trajectory, got {traj.model.tag.value}")


def _initial_slice(traj: Trajectory) -> SpectralField:
    return traj[0]


def gauge_g1(traj: Trajectory, sign: int | None = None) -> Trajectory:
    """Translate by ∓μ(u0) t: û(n,t) ↦ e^{∓inμt} û(n,t). MKDV → MKDV1."""
    _require(traj, Model.MKDV)
    sign = traj.model.sign if sign is None else sign
    mu = mass(_initial_slice(traj))
    ph = np.exp(-1j * sign * mu * np.outer(traj.times, traj.freqs))
    return traj.with_coeffs(traj.coeffs * ph, ModelKind(Model.MKDV1, sign))


def gauge_g2(traj: Trajectory, sign: int | None = None) -> Trajectory:
    """Multiply by the global phase e^{∓iP(u0)t}. MKDV1 → MKDV2."""
    _require(traj, Model.MKDV1)
    sign = traj.model.sign if sign is None else sign
    P = momentum(_initial_slice(traj))
    ph = np.exp(-1j * sign * P * traj.times)[:, None]
    return traj.with_coeffs(traj.coeffs * ph, ModelKind(Model.MKDV2, sign))


def gauge_g1_inverse(traj: Trajectory, sign: int | None = None) -> Trajectory:
    """Inverse of :func:`gauge_g1`. MKDV1 → MKDV."""
    _require(traj, Model.MKDV1)
    sign = traj.model.sign if sign is None else sign
    mu = mass(_initial_slice(traj))
    ph = np.exp(1j * sign * mu * np.outer(traj.times, traj.freqs))
    return traj.with_coeffs(traj.coeffs * ph, ModelKind(Model.MKDV, sign))


def gauge_g2_inverse(traj: Trajectory, sign: int | None = None) -> Trajectory:
    """Inverse of :func:`gauge_g2`. MKDV2 → MKDV1."""
    _require(traj, Model.MKDV2)
    sign = traj.model.sign if sign is None else sign
    P = momentum(_initial_slice(traj))
    ph = np.exp(1j * sign * P * traj.times)[:, None]
    return traj.with_coeffs(traj.coeffs * ph, ModelKind(Model.MKDV1, sign))


# ---------------------------------------------------------------------------
# Duhamel integrals on recorded slices

def _duhamel_integral(times, nonlin, k3):
    """∫₀ᵗ S(t-t') G(t') dt' for every recorded t, by cumulative Simpson."""
    t0 = times[0]
    back = np.exp(-1j * np.outer(times - t0, k3)) * nonlin
    integ = cumulative_simpson_complex(back, times)
    return np.exp(1j * np.outer(times - t0, k3)) * integ


def duhamel_residual(traj: Trajectory, model: ModelKind | None = None,
                     s: float = 0.5, p: float = 2.0) -> float:
    """max_t ‖u(t) - S(t)u0 - ∫₀ᵗ S(t-t')N(u(t'))dt'‖_{FL^{s,p}} over recorded slices."""
    model = traj.model if model is None else model
    if len(traj) < 5:
        warnings.warn("fewer than 5 recorded slices; Duhamel quadrature unreliable",
                      ResolutionWarning, stacklevel=2)
        if len(traj) < 3:
            raise ValueError("need at least 3 recorded slices")
    N, k = traj.n_max, traj.freqs
    k3 = k.astype(float) ** 3
    nonlin = np.array([_model_rhs(model, c, N, k) for c in traj.coeffs])
    duh = _duhamel_integral(traj.times, nonlin, k3)
    free = np.exp(1j * np.outer(traj.times - traj.times[0], k3)) * traj.coeffs[0]
    res = traj.coeffs - free - duh
    return max(fl_norm(SpectralField(r, N), s, p) for r in res)


@dataclass
class PicardResult:
    t_grid: np.ndarray
    iterates: list
    differences: list
    diverged_at: int | None = None

    def contraction_ratios(self, floor: float = 1e-13) -> list[float]:
        """Ratios of successive differences while both are above ``floor``.

        Below the floor the iteration has converged to rounding level and
        ratios carry no information.
        """
        out = []
        for a, b in zip(self.differences, self.differences[1:]):
            if a <= floor or b <= floor:
                break
            out.append(b / a)
        return out


def picard_iterate(u0: SpectralField, model: ModelKind, T: float, iterations: int,
                   cfg: IntegratorConfig, cutoffs: CutoffPair | None = None,
                   divergence_threshold: float = 1e8) -> PicardResult:
    """Iterate u ↦ φ S(t)u0 + φ_T D[φ N(u)] on the grid [0, 2T] with step ``cfg.dt``.

    ``D G(t) = ∫₀ᵗ S(t-t') G(t') dt'``.  Iterate 0 is φ S(t) u0.  Differences
    are sup_t FL^{1/2,2} norms of consecutive iterates.
    """
    if not 0 < T <= 1:
        raise ValueError("T must lie in (0, 1]")
    cutoffs = cutoffs or CutoffPair()
    N = max(cfg.n_max, u0.n_max)
    k = np.arange(-N, N + 1)
    k3 = k.astype(float) ** 3
    n_int = max(4, math.ceil(2 * T / cfg.dt - 1e-9))
    t = np.linspace(0.0, 2 * T, n_int + 1)
    phi = cutoffs.phi(t)[:, None]
    phi_T = cutoffs.phi(t / T)[:, None]
    free = phi * np.exp(1j * np.outer(t, k3)) * u0.resized(N).coeffs
    cur = free
    iterates = [Trajectory(t, cur, model, N)]
    diffs: list[float] = []
    diverged = None
    for m in range(iterations):
        nonlin = np.array([_model_rhs(model, c, N, k, cfg.nonlinearity_method) for c in cur])
        new = free + phi_T * _duhamel_integral(t, phi * nonlin, k3)
        d = max(fl_norm(SpectralField(r, N), 0.5, 2.0) for r in new - cur) \
            if np.all(np.isfinite(new)) else float("inf")
        diffs.append(d)
        if not np.isfinite(d) or d > divergence_threshold:
            diverged = m + 1
            break
        cur = new
        iterates.append(Trajectory(t, cur, model, N))
    return PicardResult(t, iterates, diffs, diverged)


# ---------------------------------------------------------------------------
# modified Duhamel operators

@dataclass
class DuhamelResult:
    """Time-sampled output of a Duhamel-type operator."""

    t_grid: np.ndarray
    values: np.ndarray
    n_max: int
    error_estimate: float = 0.0

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def at(self, n: int) -> np.ndarray:
        return self.values[:, n + self.n_max]


def _running_weights(m: int, h: float) -> np.ndarray:
    """Weights on nodes 0..max(m,2) for ∫ over the first ``m`` intervals of a uniform grid."""
    w = np.zeros(max(m, 2) + 1)
    if m == 0:
        return w
    if m == 1:
        w[:3] = np.array([5.0, 8.0, -1.0]) * h / 12
        return w
    simpson_end = m if m % 2 == 0 else m - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2 * h / 3
        w[1:simpson_end:2] += 4 * h / 3
        w[0] -= h / 3
        w[simpson_end] -= h / 3
    if m % 2 == 1:
        w[simpson_end:simpson_end + 4] += np.array([1.0, 3.0, 3.0, 1.0]) * 3 * h / 8
    return w


def _check_grid(t_grid) -> tuple[np.ndarray, int, float]:
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if t.size < 3:
        raise ValueError("t_grid needs at least 3 points")
    h = t[1] - t[0]
    if h <= 0 or not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12):
        raise ValueError("t_grid must be uniform and increasing")
    zero = np.flatnonzero(np.abs(t) < 1e-9 * max(1.0, h))
    if zero.size != 1:
        raise ValueError("t_grid must contain t = 0")
    if t[0] < -2 - 1e-9 or t[-1] > 2 + 1e-9:
        raise ValueError("t_grid must lie within [-2, 2]")
    return t, int(zero[0]), h


def default_t_grid(points: int = 513) -> np.ndarray:
    return np.linspace(-2.0, 2.0, points)


def _triple_groups(u1, u2, u3, region, strict, constants):
    """Group the active triples of a region by (n, Φ) and sum their products."""
    N1, N2, N3 = (a.shape[1] // 2 for a in (u1, u2, u3))
    act = [np.flatnonzero(np.any(a != 0, axis=0)) - N for a, N in ((u1, N1), (u2, N2), (u3, N3))]
    if any(a.size == 0 for a in act):
        return {}
    n1, n2, n3 = np.meshgrid(*act, indexing="ij")
    n1, n2, n3 = n1.ravel(), n2.ravel(), n3.ravel()
    order = np.abs(n2) > np.abs(n3) if strict else np.abs(n2) >= np.abs(n3)
    if region is None:
        codes_ok = assign_regions(n1, n2, n3, constants) > 0
    else:
        codes_ok = assign_regions(n1, n2, n3, constants) == _REGION_CODE[region]
    keep = order & codes_ok
    groups: dict = {}
    for a, b, c in zip(n1[keep], n2[keep], n3[keep]):
        a, b, c = int(a), int(b), int(c)
        key = (a + b + c, 3 * (a + b) * (a + c) * (b + c))
        prod = 1j * a * u1[:, a + N1] * u2[:, b + N2] * u3[:, c + N3]
        if key in groups:
            groups[key] = groups[key] + prod
        else:
            groups[key] = prod
    return groups


def _apply_duhamel(groups, t, k0, h, weight_fn, phi_t, n_out):
    """φ(t) ∫₀ᵗ e^{i(t-t')n³} w(Φ(t-t')) φ(t') P(t') dt' for every group."""
    n_t = t.size
    out = np.zeros((n_t, 2 * n_out + 1), dtype=complex)
    cache: dict = {}

    def weights(m):
        if m not in cache:
            cache[m] = _running_weights(m, h)
        return cache[m]
    for (n, Phi), prod in groups.items():
        if abs(n) > n_out:
            continue
        g = phi_t * prod
        col = np.zeros(n_t, dtype=complex)
        for kk in range(n_t):
            m = kk - k0
            if m == 0:
                continue
            sgn = 1 if m > 0 else -1
            w = weights(abs(m))
            idx = k0 + sgn * np.arange(w.size)
            if idx.min() < 0 or idx.max() >= n_t:
                w = np.array([h / 2, h / 2])
                idx = idx[:2]
            lag = t[kk] - t[idx]
            ker = np.exp(1j * lag * float(n) ** 3) * weight_fn(Phi * lag)
            col[kk] = sgn * np.dot(w, ker * g[idx])
        out[:, n + n_out] += phi_t * col
    return out


def _duhamel_operator(u1, u2, u3, region, strict, cutoffs, t_grid, constants, weight_fn, n_out):
    t, k0, h = _check_grid(t_grid)
    arrays = [np.asarray(u, dtype=complex) for u in (u1, u2, u3)]
    for a in arrays:
        if a.ndim != 2 or a.shape[0] != t.size or a.shape[1] % 2 != 1:
            raise ValueError("inputs must have shape (len(t_grid), 2N+1)")
    if n_out is None:
        n_out = sum(a.shape[1] // 2 for a in arrays)
    groups = _triple_groups(*arrays, region, strict, constants)
    phi_t = cutoffs.phi(t)
    fine = _apply_duhamel(groups, t, k0, h, weight_fn, phi_t, n_out)
    err = 0.0
    if k0 % 2 == 0 and (t.size - 1 - k0) % 2 == 0 and t.size >= 9:
        coarse_groups = {key: v[::2] for key, v in groups.items()}
        coarse = _apply_duhamel(coarse_groups, t[::2], k0 // 2, 2 * h, weight_fn,
                                phi_t[::2], n_out)
        err = float(np.max(np.abs(fine[::2] - coarse), initial=0.0)) / 15.0
    return DuhamelResult(t, fine, n_out, err)


def _check_region(region):
    if isinstance(region, str):
        region = RegionLabel(region)
    if region not in (RegionLabel.A, RegionLabel.B):
        raise ValueError("modified Duhamel operators are defined for regions A and B")
    return region


def modified_duhamel_G(u1, u2, u3, region, strict: bool = False,
                       cutoffs: CutoffPair | None = None, t_grid=None,
                       constants: RegionConstants = RegionConstants(),
                       eta: Callable | None = None, n_out: int | None = None) -> DuhamelResult:
    """G: φ(t) Σ i n1 ∫₀ᵗ e^{i(t-t')n³} η(Φ(t-t')) φ(t') û1û2û3 dt' over the region.

    Inputs are arrays of shape (len(t_grid), 2N+1) holding û_j(t, n).
    ``eta`` overrides the time-domain η (e.g. ``lambda x: 1`` collapses G to
    the truncated Duhamel operator).
    """
    region = _check_region(region)
    cutoffs = cutoffs or CutoffPair()
    t_grid = default_t_grid() if t_grid is None else t_grid
    eta = cutoffs.eta if eta is None else eta
    return _duhamel_operator(u1, u2, u3, region, strict, cutoffs, t_grid, constants,
                             lambda x: np.broadcast_to(eta(x), np.shape(x)), n_out)


def remainder_B(u1, u2, u3, region, strict: bool = False,
                cutoffs: CutoffPair | None = None, t_grid=None,
                constants: RegionConstants = RegionConstants(),
                n_out: int | None = None) -> DuhamelResult:
    """B: the same integral with weight 1 - η(Φ(t-t'))."""
    region = _check_region(region)
    cutoffs = cutoffs or CutoffPair()
    t_grid = default_t_grid() if t_grid is None else t_grid
    return _duhamel_operator(u1, u2, u3, region, strict, cutoffs, t_grid, constants,
                             lambda x: 1.0 - cutoffs.eta(x), n_out)


def truncated_duhamel_nr(u1, u2, u3, region, strict: bool = False,
                         cutoffs: CutoffPair | None = None, t_grid=None,
                         constants: RegionConstants = RegionConstants(),
                         n_out: int | None = None) -> DuhamelResult:
    """φ(t) D[φ · NR_region(u1,u2,u3)] with the same quadrature as G and B."""
    if isinstance(region, str):
        region = RegionLabel(region)
    cutoffs = cutoffs or CutoffPair()
    t_grid = default_t_grid() if t_grid is None else t_grid
    return _duhamel_operator(u1, u2, u3, region, strict, cutoffs, t_grid, constants,
                             lambda x: np.ones(np.shape(x)), n_out)


def sample_linear_solution(field: SpectralField, t_grid) -> np.ndarray:
    """û(t, n) = e^{itn³} û(n) sampled on ``t_grid``: shape (len(t_grid), 2N+1)."""
    t = np.asarray(t_grid, dtype=float)
    return np.exp(1j * np.outer(t, field.freqs.astype(float) ** 3)) * field.coeffs
