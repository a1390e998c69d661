"""Experiment drivers: the infinite-momentum dichotomy and the Lipschitz probe."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dynamics import (BlowUpError, IntegratorConfig, Model, ModelKind, Trajectory, evolve, gauge_g1,
                        gauge_g2)
from ..spectral_core import SpectralField, fl_norm, mass, momentum, project_leq


def smooth_random_field(N: int, seed: int = 0, decay: float = 3.0,
                        amplitude: float = 1.0) -> SpectralField:
    """û(n) = amplitude·⟨n⟩^{-decay}·e^{iθ_n} with independent uniform phases."""
    rng = np.random.default_rng(seed)
    n = np.arange(-N, N + 1)
    phases = np.exp(2j * np.pi * rng.random(2 * N + 1))
    return SpectralField(amplitude * (1.0 + n * n) ** (-decay / 2) * phases, N)


def real_part(field: SpectralField) -> SpectralField:
    """Coefficients of Re u: (û(n) + conj(û(-n)))/2."""
    return SpectralField(0.5 * (field.coeffs + np.conj(field.coeffs[::-1])), field.n_max,
                         field.time)


def build_infinite_momentum_data(p: float, N_cap: int, seed: int | None = None,
                                 excess: float = 0.0) -> SpectralField:
    """One-sided power law û(n) = n^{-1/2-1/p-excess} for 1 ≤ n ≤ N_cap.

    The momentum of the truncations is Σ_{n≤N} n^{-2/p-2·excess}, which diverges
    like N^{1-2/p} when excess = 0 and p > 2.  With ``seed`` the coefficients get
    independent unimodular phases (momentum is unchanged).
    """
    if p <= 2:
        raise ValueError("p must exceed 2: the truncated momenta Σ n^{-2/p} only diverge "
                         "for 2/p < 1")
    if not 1 <= N_cap <= 4096:
        raise ValueError("N_cap must lie in [1, 4096]")
    n = np.arange(1, N_cap + 1, dtype=float)
    amp = n ** (-0.5 - 1.0 / p - excess)
    if seed is not None:
        rng = np.random.default_rng(seed)
        amp = amp * np.exp(2j * np.pi * rng.random(N_cap))
    coeffs = np.zeros(2 * N_cap + 1, dtype=complex)
    coeffs[N_cap + 1:] = amp
    return SpectralField(coeffs, N_cap)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(_canonical(config).encode()).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    p: float = 6.0
    s: float = 0.5
    N_list: tuple = (16, 32, 64, 128, 256)
    T: float = 0.25
    dt: float = 5e-6
    seed: int = 0
    models: tuple = ("MKDV", "MKDV2")
    output: str | None = None
    sign: int = 1
    record_every: int = 200
    solver_n_max: int | None = None
    early_fraction: float = 0.1
    low_mode: int = 1
    random_phases: bool = False
    data_excess: float = 0.0
    workers: int = 1

    def __post_init__(self):
        N = tuple(int(v) for v in self.N_list)
        object.__setattr__(self, "N_list", N)
        object.__setattr__(self, "models", tuple(str(m).upper() for m in self.models))
        if len(N) < 2 or any(b <= a for a, b in zip(N, N[1:])):
            raise ValueError("N_list must be increasing with at least two entries")
        if any(v < 1 or v & (v - 1) for v in N):
            raise ValueError("N_list entries must be dyadic")
        if not 0 < self.T <= 1:
            raise ValueError("T must lie in (0, 1]")

    @property
    def n_solver(self) -> int:
        return self.solver_n_max or max(self.N_list)

    @property
    def record_dt(self) -> float:
        return self.dt * self.record_every

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_list"] = list(self.N_list)
        d["models"] = list(self.models)
        return d

    def hash(self) -> str:
        return config_hash(self.to_dict())


@dataclass
class DivergenceRow:
    N: int
    N_next: int
    distance: float
    predicted_phase_gap: float
    modal_phase_drift: float
    early_predicted: float
    early_observed: float

    @property
    def early_relative_error(self) -> float:
        if self.early_predicted == 0:
            return 0.0 if self.early_observed == 0 else float("inf")
        return abs(self.early_observed - self.early_predicted) / self.early_predicted


@dataclass
class DivergenceTable:
    model: str
    rows: list = field(default_factory=list)

    columns = ("model", "N", "N_next", "sup_distance", "predicted_phase_gap",
               "modal_phase_drift", "early_predicted", "early_observed")

    @property
    def distances(self) -> list[float]:
        return [r.distance for r in self.rows]

    def as_rows(self):
        for r in self.rows:
            yield (self.model, r.N, r.N_next, r.distance, r.predicted_phase_gap,
                   r.modal_phase_drift, r.early_predicted, r.early_observed)


def _relative_phase(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unwrapped arg(b/a) along time, starting from the t = 0 value."""
    ph = np.unwrap(np.angle(b * np.conj(a)))
    return ph - ph[0]


@dataclass
class DichotomyResult:
    config: ExperimentConfig
    tables: dict
    gauge_consistency: float
    momenta: dict
    masses: dict

    # checks on the tables -------------------------------------------------
    def cauchy_decreasing(self, model: str = "MKDV2") -> bool:
        d = self.tables[model].distances
        return all(b < a for a, b in zip(d, d[1:]))

    def final_over_first(self, model: str = "MKDV2") -> float:
        d = self.tables[model].distances
        return d[-1] / d[0]

    def floor_ratio(self, model: str = "MKDV") -> float:
        d = self.tables[model].distances
        return min(d) / d[0]

    def phase_errors(self, model: str = "MKDV") -> list[float]:
        return [r.early_relative_error for r in self.tables[model].rows]

    def summary(self) -> dict:
        out = {"gauge_consistency": self.gauge_consistency}
        if "MKDV2" in self.tables:
            out["mkdv2_monotone_decrease"] = self.cauchy_decreasing("MKDV2")
            out["mkdv2_final_over_first"] = self.final_over_first("MKDV2")
        if "MKDV" in self.tables:
            out["mkdv_floor_ratio"] = self.floor_ratio("MKDV")
            out["mkdv_phase_errors"] = self.phase_errors("MKDV")
        return out


def _run(u0: SpectralField, tag: str, cfg: ExperimentConfig) -> Trajectory:
    # module-level so it can be shipped to worker processes
    icfg = IntegratorConfig(dt=cfg.dt, t_end=cfg.T, n_max=cfg.n_solver,
                            record_every=cfg.record_every)
    try:
        return evolve(u0, ModelKind(Model(tag), cfg.sign), icfg)
    except BlowUpError as exc:
        N = int(np.max(np.nonzero(u0.coeffs)[0]) - u0.n_max) if np.any(u0.coeffs) else 0
        raise BlowUpError(f"{exc} [model={tag}, N={N}]", model=exc.model, time=exc.time) from exc


def run_dichotomy_experiment(cfg: ExperimentConfig, u0: SpectralField | None = None) -> DichotomyResult:
    """Evolve the truncations P_{≤N}u0 under each model and tabulate consecutive gaps.

    For every consecutive pair (N, N') the table holds the sup over recorded
    t ≤ T of ‖u_N - u_N'‖_{FL^{s,p}}, the phase-gap prediction |P_N - P_N'|·T,
    the observed relative phase of the low mode at T, and the same pair
    (prediction, observation) at the end of the early window t ≤ early_fraction·T.
    The gauge consistency entry is the largest FL^{1/2,2} distance between the
    gauged MKDV trajectory and the directly evolved MKDV2 trajectory.
    """
    if u0 is None:
        u0 = build_infinite_momentum_data(cfg.p, max(cfg.N_list),
                                          seed=cfg.seed if cfg.random_phases else None,
                                          excess=cfg.data_excess)
    data = {N: project_leq(u0, N).resized(cfg.n_solver).with_time(0.0) for N in cfg.N_list}
    jobs = [(tag, N) for tag in cfg.models for N in cfg.N_list]
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(cfg.workers) as pool:
            done = list(pool.map(_run, [data[N] for _, N in jobs], [t for t, _ in jobs],
                                 [cfg] * len(jobs)))
    else:
        done = [_run(data[N], tag, cfg) for tag, N in jobs]
    runs = {tag: {} for tag in cfg.models}
    for (tag, N), traj in zip(jobs, done):
        runs[tag][N] = traj
    momenta = {N: momentum(data[N]) for N in cfg.N_list}
    masses = {N: mass(data[N]) for N in cfg.N_list}
    gauge_gap = 0.0
    if "MKDV" in runs and "MKDV2" in runs:
        for N in cfg.N_list:
            g = gauge_g2(gauge_g1(runs["MKDV"][N]))
            diff = g.coeffs - runs["MKDV2"][N].coeffs
            gauge_gap = max(gauge_gap, max(fl_norm(SpectralField(d, cfg.n_solver), 0.5, 2.0)
                                           for d in diff))
    tables = {}
    n0 = cfg.low_mode
    for tag, by_N in runs.items():
        table = DivergenceTable(tag)
        for N, N2 in zip(cfg.N_list, cfg.N_list[1:]):
            a, b = by_N[N], by_N[N2]
            dist = max(fl_norm(SpectralField(x - y, cfg.n_solver), cfg.s, cfg.p)
                       for x, y in zip(a.coeffs, b.coeffs))
            idx = n0 + cfg.n_solver
            ph = _relative_phase(a.coeffs[:, idx], b.coeffs[:, idx])
            dP = abs(momenta[N] - momenta[N2])
            t_early = cfg.early_fraction * cfg.T
            k = int(np.searchsorted(a.times, t_early + 1e-12) - 1)
            table.rows.append(DivergenceRow(
                N=N, N_next=N2, distance=dist, predicted_phase_gap=dP * cfg.T,
                modal_phase_drift=abs(ph[-1]), early_predicted=dP * a.times[k],
                early_observed=abs(ph[k])))
        tables[tag] = table
    return DichotomyResult(cfg, tables, gauge_gap, momenta, masses)


def real_data_columns(cfg: ExperimentConfig, models=("MKDV1", "MKDV2")) -> dict:
    """Gap columns for the real part of the power-law data.

    Real data has zero momentum, so the phase gauge is the identity and the
    MKDV1 and MKDV2 columns must coincide.
    """
    u0 = real_part(build_infinite_momentum_data(cfg.p, max(cfg.N_list)))
    sub = ExperimentConfig(**{**cfg.to_dict(), "models": tuple(models),
                              "N_list": tuple(cfg.N_list)})
    res = run_dichotomy_experiment(sub, u0=u0)
    return {tag: res.tables[tag].distances for tag in models}


@dataclass
class LipschitzReport:
    scales: list
    ratios: np.ndarray          # shape (n_directions, n_scales)
    model: str
    T: float

    @property
    def variation(self) -> np.ndarray:
        """Per-direction spread (max/min - 1) of the ratios across scales."""
        r = self.ratios
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r.min(axis=1) > 0, r.max(axis=1) / r.min(axis=1) - 1.0, 0.0)

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)) and np.all(self.variation < 0.2))

    def to_dict(self) -> dict:
        return {"model": self.model, "T": self.T, "scales": list(self.scales),
                "ratios": self.ratios.tolist(), "variation": self.variation.tolist(),
                "passed": self.passed}


def run_lipschitz_probe(u0: SpectralField, scales, model: ModelKind = ModelKind(Model.MKDV2),
                        cfg: IntegratorConfig | None = None, n_directions: int = 3,
                        seed: int = 0, s: float = 0.5, p: float = 2.0) -> LipschitzReport:
    """Ratios ‖u(T; u0+h) - u(T; u0)‖ / ‖h‖ in FL^{s,p} for h = scale·direction.

    Directions are random smooth fields of unit FL^{s,p} norm.
    """
    cfg = cfg or IntegratorConfig(dt=1e-3, t_end=0.5, n_max=max(u0.n_max, 16), record_every=10 ** 6)
    scales = [float(v) for v in scales]
    base_norm = fl_norm(u0, s, p)
    if any(sc > 0.1 * base_norm + 1e-15 for sc in scales):
        raise ValueError("perturbation scales must not exceed 0.1·‖u0‖")
    N = cfg.n_max
    u0 = u0.resized(N)
    ref = evolve(u0, model, cfg).coeffs[-1]
    ratios = np.zeros((n_directions, len(scales)))
    for d in range(n_directions):
        direction = smooth_random_field(N, seed=seed + 1 + d, decay=2.0)
        direction = direction * (1.0 / fl_norm(direction, s, p))
        for j, sc in enumerate(scales):
            if sc == 0:
                ratios[d, j] = 0.0
                continue
            out = evolve(u0 + direction * sc, model, cfg).coeffs[-1]
            ratios[d, j] = fl_norm(SpectralField(out - ref, N), s, p) / sc
    return LipschitzReport(scales, ratios, str(model), cfg.t_end)
