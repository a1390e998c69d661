import json
import math

import numpy as np
import pytest
import sympy

from mkdvkit.dynamics import IntegratorConfig, Model, ModelKind
from mkdvkit.harness.cli import main
from mkdvkit.harness.emit import Table, canonical_json, emit, load_json, metadata, table_to_csv
from mkdvkit.harness.experiments import (ExperimentConfig, build_infinite_momentum_data,
                                         config_hash, real_data_columns, real_part,
                                         run_dichotomy_experiment, run_lipschitz_probe,
                                         smooth_random_field)
from mkdvkit.harness.lemmas import (convolution_gamma, convolution_integral,
                                    convolution_lemma_check, divisor_count_near, divisors,
                                    sample_divisor_instances, verify_divisor_lemma)
from mkdvkit.spectral_core import fl_norm, momentum, project_leq


# ---------------------------------------------------------------------------
# data


def test_power_law_momentum_matches_direct_sum():
    u = build_infinite_momentum_data(6, 128)
    for N in (16, 64, 128):
        ref = math.fsum(n ** (-1 / 3) for n in range(1, N + 1))
        assert abs(momentum(project_leq(u, N)) - ref) < 1e-11


def test_power_law_momentum_grows_like_n_to_two_thirds():
    u = build_infinite_momentum_data(6, 128)
    ratio = momentum(project_leq(u, 128)) / momentum(project_leq(u, 64))
    assert abs(ratio / 2 ** (2 / 3) - 1) < 0.1


def test_power_law_norm_diverges_logarithmically():
    # ‖P_N u‖^6 in FL^{1/2,6} is Σ_{n≤N} ⟨n⟩^3 n^{-4}, roughly a harmonic sum
    u = build_infinite_momentum_data(6, 1024)
    a, b = fl_norm(project_leq(u, 512), 0.5, 6), fl_norm(u, 0.5, 6)
    ref = (math.fsum((1 + n * n) ** 1.5 * n ** -4.0 for n in range(1, 1025))
           / math.fsum((1 + n * n) ** 1.5 * n ** -4.0 for n in range(1, 513))) ** (1 / 6)
    assert abs(b / a - ref) < 1e-12
    assert 1.01 < b / a < 1.02


def test_power_law_data_validation_and_phases():
    with pytest.raises(ValueError):
        build_infinite_momentum_data(2, 16)
    with pytest.raises(ValueError):
        build_infinite_momentum_data(6, 5000)
    u = build_infinite_momentum_data(6, 32)
    v = build_infinite_momentum_data(6, 32, seed=3)
    assert np.allclose(np.abs(u.coeffs), np.abs(v.coeffs), atol=1e-15)
    assert abs(momentum(u) - momentum(v)) < 1e-12
    assert np.all(u.coeffs[:33] == 0)


def test_real_part_has_zero_momentum():
    r = real_part(build_infinite_momentum_data(6, 64, seed=1))
    assert abs(momentum(r)) < 1e-13
    assert np.allclose(r.coeffs, np.conj(r.coeffs[::-1]), atol=0)


def test_smooth_random_field_decay():
    f = smooth_random_field(16, seed=2, decay=3)
    n = f.freqs
    assert np.allclose(np.abs(f.coeffs), (1 + n * n) ** -1.5, atol=1e-15)


# ---------------------------------------------------------------------------
# divisor and convolution estimates


def test_divisors_against_sympy():
    rng = np.random.default_rng(0)
    for k in list(rng.integers(1, 10 ** 9, 30)) + [1, 2, 720720, 999999937]:
        assert list(divisors(int(k))) == sympy.divisors(int(k))


def test_divisor_count_examples():
    assert divisor_count_near(12, 5, 3) == 4        # 2, 3, 4, 6
    assert divisor_count_near(1, 0, 1) == 2         # ±1
    assert divisor_count_near(13, 0, 13) == 4       # ±1, ±13
    assert divisor_count_near(-12, -5, 3.9) == 4    # sign of k is irrelevant
    with pytest.raises(ValueError):
        divisor_count_near(0, 1, 2)
    with pytest.raises(ValueError):
        divisor_count_near(5, 1, 0.5)


def test_divisor_counts_against_sympy_brute_force():
    for k, q, rho in sample_divisor_instances(200, seed=5):
        divs = sympy.divisors(abs(k))
        ref = sum(1 for d in divs + [-d for d in divs] if abs(d - q) <= rho)
        assert divisor_count_near(k, q, rho) == ref


def test_divisor_samples_respect_separation():
    for k, q, rho in sample_divisor_instances(300, seed=1):
        assert abs(q) >= abs(k) ** (1 / 3) and abs(q) >= 8 * rho


def test_divisor_lemma_small_run():
    rep = verify_divisor_lemma(1000, seed=2)
    assert rep.passed and np.isfinite(rep.constant)
    assert rep.to_dict()["samples"] == 1000


def test_convolution_gamma_branches():
    assert convolution_gamma(0.4, 0.8) == pytest.approx(0.2)
    assert convolution_gamma(1.0, 1.0, eps=0.01) == pytest.approx(0.99)
    assert convolution_gamma(0.5, 1.5) == 0.5
    with pytest.raises(ValueError):
        convolution_gamma(0.2, 0.3)
    with pytest.raises(ValueError):
        convolution_gamma(0.9, 0.5)


def test_convolution_integral_closed_forms():
    # two Lorentzians: ∫ dx / ((1+(x-a)²)(1+(x-b)²)) = 2π / (4 + (a-b)²)
    for a, b in [(0.0, 0.0), (0.0, 3.0), (-10.0, 40.0)]:
        assert abs(convolution_integral(2, 2, a, b) - 2 * math.pi / (4 + (a - b) ** 2)) < 1e-10
    # a = b: ∫⟨x⟩^{-2} dx = π
    assert abs(convolution_integral(0.5, 1.5, 5.0, 5.0) - math.pi) < 1e-9


@pytest.mark.parametrize("alpha, beta", [(0.4, 0.8), (1.0, 1.0), (0.5, 1.5)])
def test_convolution_ratio_bounded(alpha, beta):
    assert convolution_lemma_check(alpha, beta).passed


# ---------------------------------------------------------------------------
# emitters


def test_empty_table_csv_is_header_only():
    assert table_to_csv(Table(("a", "b"))) == "a,b\n"
    with pytest.raises(ValueError):
        Table(("a", "b"), [(1,)])


def test_json_round_trip_is_byte_identical(tmp_path):
    payload = {"x": [1.5, float("nan"), np.float64(2.0)], "z": np.arange(3), "t": Table(("k",), [(1,)])}
    p1 = emit(payload, tmp_path / "a.json", config={"b": 1, "a": 2}, seed=4)
    data = load_json(p1)
    assert data["metadata"]["seed"] == 4 and data["metadata"]["config_hash"]
    p2 = tmp_path / "b.json"
    p2.write_text(canonical_json(data))
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_writes_metadata_sidecar(tmp_path):
    p = emit(Table(("a",), [(0.1,)]), tmp_path / "t.csv", config={"k": 1}, seed=0)
    assert p.read_text() == "a\n0.1\n"
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    assert meta == metadata({"k": 1}, 0)
    with pytest.raises(ValueError):
        emit({}, tmp_path / "x.txt")
    with pytest.raises(TypeError):
        emit({}, tmp_path / "x.csv")


def test_config_hash_sensitivity():
    a = ExperimentConfig()
    assert a.hash() == ExperimentConfig().hash()
    assert a.hash() != ExperimentConfig(seed=1).hash()
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(N_list=(16, 48))
    with pytest.raises(ValueError):
        ExperimentConfig(N_list=(32, 16))
    with pytest.raises(ValueError):
        ExperimentConfig(T=2.0)


# ---------------------------------------------------------------------------
# experiments


def small_config(**kw):
    base = dict(N_list=(4, 8, 16), T=0.05, dt=1e-4, record_every=10)
    base.update(kw)
    return ExperimentConfig(**base)


def test_small_dichotomy_run():
    res = run_dichotomy_experiment(small_config())
    assert set(res.tables) == {"MKDV", "MKDV2"}
    for tab in res.tables.values():
        assert [(r.N, r.N_next) for r in tab.rows] == [(4, 8), (8, 16)]
        assert all(d > 0 for d in tab.distances)
    # momentum of the truncations enters the predicted phase gap
    row = res.tables["MKDV"].rows[0]
    assert row.predicted_phase_gap == pytest.approx(abs(res.momenta[4] - res.momenta[8]) * 0.05)
    assert res.gauge_consistency < 1e-6
    assert all(np.isfinite(res.phase_errors("MKDV")))
    assert set(res.summary()) >= {"mkdv2_monotone_decrease", "mkdv_floor_ratio"}


def test_real_data_columns_coincide():
    cols = real_data_columns(small_config())
    assert np.max(np.abs(np.subtract(cols["MKDV1"], cols["MKDV2"]))) < 1e-6


def test_lipschitz_zero_scale_and_linear_control():
    u0 = smooth_random_field(8, seed=1)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.1, n_max=8, record_every=10 ** 6)
    rep = run_lipschitz_probe(u0, [0.0, 1e-3], ModelKind(Model.LINEAR), cfg, n_directions=2)
    assert np.all(rep.ratios[:, 0] == 0)
    assert np.allclose(rep.ratios[:, 1], 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        run_lipschitz_probe(u0, [1.0], ModelKind(Model.LINEAR), cfg)


def test_lipschitz_plateau_for_smooth_data():
    u0 = smooth_random_field(8, seed=2, amplitude=0.5)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.2, n_max=8, record_every=10 ** 6)
    rep = run_lipschitz_probe(u0, [1e-2, 1e-3, 1e-4], cfg=cfg, n_directions=2)
    assert rep.passed and np.all(rep.variation < 0.2)


# ---------------------------------------------------------------------------
# command line


def test_cli_convolution_and_regions(capsys):
    assert main(["lemmas", "convolution", "--alpha", "0.4", "--beta", "0.8"]) == 0
    assert main(["regions", "verify", "--bound", "8"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 4 and "FAIL" not in out


def test_cli_kernel_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "k.csv"
    rc = main(["kernels", "sweep", "--grid-extent", "3", "--phi", "6", "--output", str(out),
               "--dump-dir", str(tmp_path / "dump")])
    assert rc == 0
    assert out.read_text().splitlines()[0] == "kernel,Phi,constant,tau_at_max,lambda_at_max"
    dump = (tmp_path / "dump" / "KB_Phi6.csv").read_text().splitlines()
    assert dump[0] == "tau,lambda,phi,re,im,bound_value,ratio" and len(dump) == 50
    assert "PASS eta_hat(-1) == 0" in capsys.readouterr().out


def test_cli_simulate_and_dichotomy(tmp_path, capsys):
    traj = tmp_path / "traj.jsonl"
    assert main(["simulate", "--n-max", "4", "--t-end", "0.01", "--dt", "1e-3",
                 "--record-every", "5", "-o", str(traj)]) == 0
    lines = traj.read_text().splitlines()
    assert len(lines) == 3 and json.loads(lines[-1])["time"] == pytest.approx(0.01)
    main(["dichotomy", "--N-list", "4,8", "--T", "0.02", "--dt", "1e-4", "--record-every", "10",
          "--json"])
    out = capsys.readouterr().out
    assert "mkdv2 gaps decrease" in out
    report = json.loads(out[out.index("{"):])
    assert report["config"]["N_list"] == [4, 8]


def test_cli_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--model", "KDV"])
    assert info.value.code == 2
