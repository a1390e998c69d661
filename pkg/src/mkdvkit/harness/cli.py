"""Command line entry point: ``mkdvkit <command> ...``.

The exit status is 1 when any check that the command asserts reports FAIL,
and 0 otherwise.  Argument errors exit with status 2 (argparse).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..dynamics import IntegratorConfig, Model, ModelKind, evolve
from ..spectral_core import SpectralField
from .emit import Table, canonical_json, divergence_table, emit


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _line(name: str, ok: bool | None, detail: str = "") -> str:
    tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
    return f"{tag} {name}" + (f": {detail}" if detail else "")


def _finish(args, payload, table: Table | None, checks: list[tuple[str, bool | None, str]],
            config: dict, seed=None) -> int:
    for name, ok, detail in checks:
        print(_line(name, ok, detail))
    if args.output:
        out = Path(args.output)
        if out.suffix == ".csv" and table is not None:
            emit(table, out, "csv", config=config, seed=seed)
        else:
            emit(payload, out, "json", config=config, seed=seed)
    elif args.json:
        sys.stdout.write(canonical_json(payload))
    return 1 if any(ok is False for _, ok, _ in checks) else 0


def _common(p: argparse.ArgumentParser):
    p.add_argument("--output", "-o", help="write results to this .csv or .json file")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .experiments import smooth_random_field
    if args.input:
        u0 = SpectralField.from_json(Path(args.input).read_text())
    else:
        u0 = smooth_random_field(args.n_max, seed=args.seed, decay=args.decay,
                                 amplitude=args.amplitude)
    cfg = IntegratorConfig(dt=args.dt, t_end=args.t_end, n_max=args.n_max,
                           record_every=args.record_every)
    traj = evolve(u0, ModelKind(Model(args.model.upper()), args.sign), cfg)
    text = traj.to_jsonl()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_dichotomy(args) -> int:
    from .experiments import ExperimentConfig, run_dichotomy_experiment
    cfg = ExperimentConfig(p=args.p, s=args.s, N_list=tuple(_ints(args.N_list)), T=args.T,
                           dt=args.dt, seed=args.seed, models=tuple(args.models.split(",")),
                           output=args.output, sign=args.sign, record_every=args.record_every,
                           random_phases=args.random_phases, workers=args.workers)
    res = run_dichotomy_experiment(cfg)
    table = divergence_table(res)
    summ = res.summary()
    checks = []
    if "MKDV2" in res.tables:
        checks.append(("mkdv2 gaps decrease", summ["mkdv2_monotone_decrease"],
                       f"gaps={['%.4g' % d for d in res.tables['MKDV2'].distances]}"))
        checks.append(("mkdv2 final/first < 1/4", summ["mkdv2_final_over_first"] < 0.25,
                       f"{summ['mkdv2_final_over_first']:.4g}"))
    if "MKDV" in res.tables:
        checks.append(("mkdv floor >= first/2", summ["mkdv_floor_ratio"] >= 0.5,
                       f"{summ['mkdv_floor_ratio']:.4g}"))
        err = max(summ["mkdv_phase_errors"])
        checks.append(("mkdv early phase gap within 10%", err <= 0.10, f"max rel err {err:.3g}"))
    if "MKDV" in res.tables and "MKDV2" in res.tables:
        checks.append(("gauge consistency (informational)", None,
                       f"{res.gauge_consistency:.3g}"))
    payload = {"config": cfg.to_dict(), "table": table, "summary": summ}
    return _finish(args, payload, table, checks, cfg.to_dict(), cfg.seed)


def cmd_lipschitz(args) -> int:
    from .experiments import run_lipschitz_probe, smooth_random_field
    u0 = smooth_random_field(args.n_max, seed=args.seed, amplitude=args.amplitude)
    scales = _floats(args.scales)
    cfg = IntegratorConfig(dt=args.dt, t_end=args.T, n_max=args.n_max, record_every=10 ** 9)
    rep = run_lipschitz_probe(u0, scales, ModelKind(Model(args.model.upper()), args.sign), cfg,
                              n_directions=args.directions, seed=args.seed)
    rows = [(d, sc, float(rep.ratios[d, j])) for d in range(rep.ratios.shape[0])
            for j, sc in enumerate(scales)]
    table = Table(("direction", "scale", "ratio"), rows)
    checks = [("lipschitz plateau", rep.passed,
               f"max variation {float(rep.variation.max()):.3g}")]
    config = {**vars(args)}
    config.pop("func", None)
    return _finish(args, rep.to_dict(), table, checks, config, args.seed)


def cmd_kernels_sweep(args) -> int:
    from ..kernels import eta_hat, hilbert_pv, sweep_kernels, sweep_stability
    phis = _ints(args.phi)
    alphas = {"K0": args.alpha, "Kplus": args.alpha, "KB": args.alpha_b}
    checks = [("eta_hat(-1) == 0", float(abs(eta_hat(-1.0))) == 0.0, f"{eta_hat(-1.0)!r}")]
    hv = hilbert_pv(lambda x: eta_hat(x), -1.0)
    checks.append(("PV Hilbert of eta_hat at -1 equals -1", abs(hv + 1) <= 1e-6, f"{hv:.12g}"))
    if args.check_refinement:
        stab = sweep_stability(args.grid_extent, args.grid_step, phis, alphas)
        rows = [(s.name, s.Phi, s.coarse, s.fine, s.relative_change) for s in stab]
        table = Table(("kernel", "Phi", "constant_step", "constant_half_step", "relative_change"),
                      rows)
        for s in stab:
            checks.append((f"{s.name} Phi={s.Phi} stable under step halving", bool(s.passed),
                           f"C={s.coarse:.4g} -> {s.fine:.4g}"))
    else:
        grids = sweep_kernels(args.grid_extent, args.grid_step, phis, alphas)
        rows = [(g.name, g.Phi, g.constant, *g.argmax) for g in grids.values()]
        table = Table(("kernel", "Phi", "constant", "tau_at_max", "lambda_at_max"), rows)
        for g in grids.values():
            checks.append((f"{g.name} Phi={g.Phi} constant finite", bool(np.isfinite(g.constant)),
                           f"C={g.constant:.4g}"))
        if args.dump_dir:
            d = Path(args.dump_dir)
            d.mkdir(parents=True, exist_ok=True)
            for g in grids.values():
                emit(Table(("tau", "lambda", "phi", "re", "im", "bound_value", "ratio"), list(g.rows())),
                     d / f"{g.name}_Phi{g.Phi}.csv", "csv")
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return _finish(args, {"table": table}, table, checks, config)


def cmd_regions_verify(args) -> int:
    from ..nonlinearity import RegionConstants, verify_region_lemma
    rep = verify_region_lemma(args.bound, RegionConstants(args.much_less, args.comparable))
    d = rep.to_dict()
    checks = [("implications (1)-(4) hold", all(rep.violations.get(k, 0) == 0 for k in "1234"),
               f"violations={rep.violations}"),
              ("constants (5)-(6) finite", bool(rep.passed),
               f"c5={rep.c5:.4g} c6={rep.c6:.4g} c6'={rep.c6_prime:.4g}"),
              ("assigned coverage 100%", rep.assigned_coverage == 1.0,
               f"raw={rep.raw_coverage:.4f} assigned={rep.assigned_coverage:.4f}")]
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return _finish(args, d, None, checks, config)


def cmd_lemmas(args) -> int:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    if args.lemma == "divisor":
        from .lemmas import verify_divisor_lemma
        rep = verify_divisor_lemma(args.samples, args.seed)
        table = Table(("k", "q", "rho", "count"), [(s.k, s.q, s.rho, s.count) for s in rep.samples])
        checks = [("divisor counts under fitted C*rho^(1/2)", rep.passed,
                   f"C={rep.constant:.4g}, {len(rep.violations)} violations")]
        return _finish(args, rep.to_dict(), table, checks, config, args.seed)
    if args.lemma == "convolution":
        from .lemmas import convolution_lemma_check
        rep = convolution_lemma_check(args.alpha, args.beta)
        table = Table(("separation", "ratio"), list(zip(rep.separations.tolist(),
                                                         rep.ratios.tolist())))
        checks = [(f"convolution ratio bounded (alpha={args.alpha}, beta={args.beta}, "
                   f"gamma={rep.gamma:.4g})", rep.passed, f"growth {rep.growth:.4g}")]
        return _finish(args, rep.to_dict(), table, checks, config)
    from ..xsb_norms import cutoff_gain_check, cutoff_gain_example, make_params
    T_list = _floats(args.T_list)
    rep = cutoff_gain_check(cutoff_gain_example(args.samples), T_list, args.theta,
                            make_params(args.delta))
    table = Table(("T", "ratio"), list(zip(T_list, rep.ratios)))
    checks = [("cutoff gain ratio does not grow as T decreases", rep.passed,
               f"ratios={['%.3g' % r for r in rep.ratios]}")]
    return _finish(args, rep.to_dict(), table, checks, config)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mkdvkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve one field and print the trajectory as JSON lines")
    p.add_argument("--model", default="MKDV2", choices=["MKDV", "MKDV1", "MKDV2", "LINEAR",
                                                        "mkdv", "mkdv1", "mkdv2", "linear"])
    p.add_argument("--sign", type=int, default=1, choices=[1, -1])
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--n-max", "--nmax", dest="n_max", type=int, default=32)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--input", help="initial field as SpectralField JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decay", type=float, default=3.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dichotomy", help="truncation gaps for MKDV vs MKDV2")
    p.add_argument("--p", type=float, default=6.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--N-list", default="16,32,64,128,256")
    p.add_argument("--T", type=float, default=0.25)
    p.add_argument("--dt", type=float, default=5e-6)
    p.add_argument("--record-every", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-phases", action="store_true")
    p.add_argument("--models", default="MKDV,MKDV2")
    p.add_argument("--sign", type=int, default=1, choices=[1, -1])
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_dichotomy)

    p = sub.add_parser("lipschitz", help="difference ratios for small perturbations")
    p.add_argument("--scales", default="1e-2,1e-3,1e-4")
    p.add_argument("--model", default="MKDV2")
    p.add_argument("--sign", type=int, default=1, choices=[1, -1])
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--n-max", "--nmax", dest="n_max", type=int, default=16)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--directions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("kernels", help="kernel tools")
    ksub = p.add_subparsers(dest="kernels_command", required=True)
    k = ksub.add_parser("sweep", help="empirical kernel constants on a (tau, lambda) grid")
    k.add_argument("--grid-extent", type=float, default=50.0)
    k.add_argument("--grid-step", type=float, default=1.0)
    k.add_argument("--phi", default="6,-6,24,-24,96,-96,960,-960")
    k.add_argument("--alpha", type=float, default=0.5, help="exponent in the K0/K+ bounds")
    k.add_argument("--alpha-b", type=float, default=2.0, help="exponent in the K_B bound")
    k.add_argument("--check-refinement", action="store_true",
                   help="repeat at half the step and require constants within 10%%")
    k.add_argument("--dump-dir", help="write one CSV per (kernel, Phi)")
    _common(k)
    k.set_defaults(func=cmd_kernels_sweep)

    p = sub.add_parser("regions", help="frequency-region tools")
    rsub = p.add_subparsers(dest="regions_command", required=True)
    r = rsub.add_parser("verify", help="exhaustive check of the region implications")
    r.add_argument("--bound", type=int, default=128)
    r.add_argument("--much-less", type=float, default=8.0)
    r.add_argument("--comparable", type=float, default=4.0)
    _common(r)
    r.set_defaults(func=cmd_regions_verify)

    p = sub.add_parser("lemmas", help="counting and analytic estimate verifiers")
    p.add_argument("lemma", choices=["divisor", "convolution", "cutoff-gain"])
    p.add_argument("--samples", type=int, default=None,
                   help="divisor: sample count (10000); cutoff-gain: time samples (16384)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=0.025)
    p.add_argument("--T-list", default="1,0.5,0.25,0.125,0.0625,0.03125,0.015625")
    _common(p)
    p.set_defaults(func=cmd_lemmas)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "lemma", None) is not None and args.samples is None:
        args.samples = 10_000 if args.lemma == "divisor" else 2 ** 14
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
