import warnings

import numpy as np
import pytest
from scipy import integrate

from mkdvkit.dynamics import (BlowUpError, IntegratorConfig, Model, ModelKind, ResolutionWarning,
                              Trajectory, default_t_grid, duhamel_residual, evolve, gauge_g1,
                              gauge_g1_inverse, gauge_g2, gauge_g2_inverse, linear_propagate,
                              model_nonlinearity, modified_duhamel_G, picard_iterate,
                              remainder_B, sample_linear_solution, truncated_duhamel_nr)
from mkdvkit.kernels import eta_time, phi_eval
from mkdvkit.nonlinearity import RegionLabel, mkdv2_nonlinearity
from mkdvkit.spectral_core import SpectralField, fl_norm, mass, momentum


def smooth_field(N, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    n = np.arange(-N, N + 1)
    return SpectralField(scale * np.exp(2j * np.pi * rng.random(2 * N + 1)) * (1.0 + n * n) ** -1.5, N)


def test_linear_propagate_group_law_and_mass():
    f = smooth_field(6, seed=1)
    assert linear_propagate(f, 0.0) == f
    a = linear_propagate(linear_propagate(f, 0.3), 0.45)
    b = linear_propagate(f, 0.75)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-13
    assert abs(mass(b) - mass(f)) < 1e-14
    g = linear_propagate(SpectralField.from_modes({2: 0.5}, n_max=2), 0.1)
    assert abs(g[2] - 0.5 * np.exp(0.8j)) < 1e-15


def test_linear_model_reproduces_propagator():
    f = smooth_field(8, seed=2)
    traj = evolve(f, ModelKind(Model.LINEAR), IntegratorConfig(dt=0.01, t_end=0.5, n_max=8))
    assert np.max(np.abs(traj.coeffs[-1] - linear_propagate(f, 0.5).coeffs)) < 1e-13


@pytest.mark.parametrize("tag, rate", [("MKDV", 1), ("MKDV1", 0), ("MKDV2", -1)])
@pytest.mark.parametrize("sign", [1, -1])
def test_single_mode_closed_forms(tag, rate, sign):
    k, c = 2, 0.8
    f = SpectralField.from_modes({k: c}, n_max=4)
    traj = evolve(f, ModelKind(tag, sign), IntegratorConfig(dt=1e-3, t_end=1.0, n_max=4,
                                                             record_every=100))
    t = traj.times
    exact = c * np.exp(1j * k ** 3 * t + rate * sign * 1j * k * c * c * t)
    assert np.max(np.abs(traj.coeffs[:, k + 4] - exact)) < 1e-9


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.2)
    with pytest.raises(ValueError):
        IntegratorConfig(n_max=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="RK45")
    with pytest.raises(ValueError):
        evolve(smooth_field(8), ModelKind(), IntegratorConfig(n_max=4))


def test_blow_up_detected():
    f = SpectralField.from_modes({1: 5.0, 2: 5.0, -3: 5.0}, n_max=3)
    with pytest.raises(BlowUpError) as info:
        evolve(f, ModelKind(Model.MKDV), IntegratorConfig(dt=0.1, t_end=1.0, n_max=3,
                                                          blowup_threshold=10.0))
    assert info.value.step is not None


def test_trajectory_invariants_and_jsonl():
    f = smooth_field(3)
    traj = evolve(f, ModelKind(Model.MKDV2), IntegratorConfig(dt=0.01, t_end=0.05, n_max=3))
    back = Trajectory.from_jsonl(traj.to_jsonl(), traj.model)
    assert np.array_equal(back.coeffs, traj.coeffs) and np.array_equal(back.times, traj.times)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 3)), ModelKind(), 1)


def test_model_nonlinearity_matches_module():
    f = smooth_field(6, seed=3)
    a = model_nonlinearity(f, ModelKind(Model.MKDV2, -1))
    b = mkdv2_nonlinearity(f, -1)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-13


def test_gauge_maps_basic_properties():
    f = smooth_field(6, seed=4)
    traj = evolve(f, ModelKind(Model.MKDV), IntegratorConfig(dt=1e-3, t_end=0.2, n_max=6,
                                                             record_every=20))
    g1 = gauge_g1(traj)
    g2 = gauge_g2(g1)
    assert g1.model.tag is Model.MKDV1 and g2.model.tag is Model.MKDV2
    assert np.array_equal(g2.coeffs[0], traj.coeffs[0])
    assert np.allclose(np.abs(g2.coeffs), np.abs(traj.coeffs), atol=1e-15)
    for i in range(len(traj)):
        assert abs(fl_norm(g2[i], 0.7, 3) - fl_norm(traj[i], 0.7, 3)) < 1e-12
    back = gauge_g1_inverse(gauge_g2_inverse(g2))
    assert np.max(np.abs(back.coeffs - traj.coeffs)) < 1e-14
    with pytest.raises(ValueError):
        gauge_g2(traj)


def test_gauge_g2_trivial_for_real_data():
    f = smooth_field(5, seed=5)
    real = SpectralField(0.5 * (f.coeffs + np.conj(f.coeffs[::-1])), 5)
    traj = evolve(real, ModelKind(Model.MKDV), IntegratorConfig(dt=1e-3, t_end=0.1, n_max=5,
                                                                record_every=10))
    g1 = gauge_g1(traj)
    assert abs(momentum(real)) < 1e-15
    assert np.max(np.abs(gauge_g2(g1).coeffs - g1.coeffs)) < 1e-15


def test_gauge_equivalence_small():
    f = smooth_field(8, seed=6)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.3, n_max=8, record_every=30)
    mk = evolve(f, ModelKind(Model.MKDV), cfg)
    mk1 = evolve(f, ModelKind(Model.MKDV1), cfg)
    mk2 = evolve(f, ModelKind(Model.MKDV2), cfg)
    d1 = max(fl_norm(SpectralField(r, 8), 0.5, 2) for r in gauge_g1(mk).coeffs - mk1.coeffs)
    d2 = max(fl_norm(SpectralField(r, 8), 0.5, 2) for r in gauge_g2(gauge_g1(mk)).coeffs - mk2.coeffs)
    assert d1 < 1e-8 and d2 < 1e-8


def test_duhamel_residual_linear_and_single_mode():
    f = smooth_field(4, seed=7)
    lin = evolve(f, ModelKind(Model.LINEAR), IntegratorConfig(dt=0.01, t_end=0.5, n_max=4))
    assert duhamel_residual(lin) < 1e-10
    g = SpectralField.from_modes({1: 0.7}, n_max=2)
    traj = evolve(g, ModelKind(Model.MKDV2), IntegratorConfig(dt=1e-3, t_end=0.5, n_max=2))
    assert duhamel_residual(traj) < 1e-8


def test_duhamel_residual_order():
    f = smooth_field(3, seed=8, scale=2.0)
    model = ModelKind(Model.MKDV)
    res = []
    for dt in (0.02, 0.01):
        traj = evolve(f, model, IntegratorConfig(dt=dt, t_end=0.4, n_max=3))
        res.append(duhamel_residual(traj))
    assert 10 < res[0] / res[1] < 22


def test_duhamel_residual_warns_on_sparse_slices():
    f = smooth_field(2)
    traj = evolve(f, ModelKind(Model.MKDV), IntegratorConfig(dt=0.01, t_end=0.03, n_max=2))
    with pytest.warns(ResolutionWarning):
        duhamel_residual(traj)


def test_picard_zero_and_small_data():
    cfg = IntegratorConfig(dt=2e-3, n_max=6)
    z = picard_iterate(SpectralField.zeros(6), ModelKind(Model.MKDV2), 0.1, 3, cfg)
    assert all(d == 0 for d in z.differences)
    f = smooth_field(6, seed=9)
    f = f * (0.1 / fl_norm(f, 0.5, 2))
    res = picard_iterate(f, ModelKind(Model.MKDV2), 0.1, 6, cfg)
    assert res.diverged_at is None
    assert all(r < 0.5 for r in res.contraction_ratios())


def test_picard_rejects_long_horizon():
    with pytest.raises(ValueError):
        picard_iterate(smooth_field(2), ModelKind(), 1.5, 2, IntegratorConfig())


# ---------------------------------------------------------------------------
# modified Duhamel operators


def single_triple(n1, n2, n3, t):
    N = max(abs(n1), abs(n2), abs(n3))
    return [sample_linear_solution(SpectralField.from_modes({m: 1.0}, n_max=N), t)
            for m in (n1, n2, n3)]


def test_duhamel_operators_vanish_at_zero():
    t = np.linspace(-1, 1, 65)
    u = single_triple(8, -1, 0, t)
    k0 = 32
    for op in (modified_duhamel_G, remainder_B, truncated_duhamel_nr):
        assert np.all(op(*u, RegionLabel.A, t_grid=t).values[k0] == 0)


def test_g_with_unit_eta_is_truncated_duhamel():
    t = np.linspace(-2, 2, 257)
    u = single_triple(8, -1, 0, t)
    assert np.max(np.abs(truncated_duhamel_nr(*u, "A", t_grid=t).values)) > 0.1
    G1 = modified_duhamel_G(*u, "A", t_grid=t, eta=lambda x: 1.0)
    D = truncated_duhamel_nr(*u, "A", t_grid=t)
    assert np.max(np.abs(G1.values - D.values)) < 1e-12


def test_additivity_g_plus_b():
    t = default_t_grid(257)
    u = single_triple(1, 1, 0, t)
    G = modified_duhamel_G(*u, "B", t_grid=t)
    B = remainder_B(*u, "B", t_grid=t)
    D = truncated_duhamel_nr(*u, "B", t_grid=t)
    assert np.max(np.abs(G.values + B.values - D.values)) < 1e-10


def test_b_against_direct_adaptive_quadrature():
    n1, n2, n3 = 8, -1, 0
    n, Phi = 7, 3 * 7 * 8 * (-1)
    t = np.linspace(-2, 2, 16385)
    B = remainder_B(*single_triple(n1, n2, n3, t), "A", t_grid=t)
    for tt in (0.5, 1.25, -0.75):
        k = int(np.argmin(np.abs(t - tt)))

        def integrand(s, part):
            v = (np.exp(1j * (t[k] - s) * n ** 3) * (1 - eta_time(Phi * (t[k] - s))) * phi_eval(s)
                 * np.exp(1j * s * (n1 ** 3 + n2 ** 3 + n3 ** 3)))
            return v.real if part == 0 else v.imag
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            re = integrate.quad(integrand, 0, t[k], args=(0,), limit=500, epsabs=1e-13)[0]
            im = integrate.quad(integrand, 0, t[k], args=(1,), limit=500, epsabs=1e-13)[0]
        direct = phi_eval(t[k]) * 1j * n1 * (re + 1j * im)
        assert abs(B.at(n)[k] - direct) < 1e-8


def test_g_region_checks():
    t = np.linspace(-1, 1, 33)
    u = single_triple(4, 1, 0, t)
    with pytest.raises(ValueError):
        modified_duhamel_G(*u, "C", t_grid=t)
    with pytest.raises(ValueError):
        modified_duhamel_G(*u, "A", t_grid=np.linspace(0.1, 1, 33))
    with pytest.raises(ValueError):
        modified_duhamel_G(*u, "A", t_grid=np.linspace(-3, 3, 33))
