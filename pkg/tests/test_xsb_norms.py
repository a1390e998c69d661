import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mkdvkit.kernels import phi_eval
from mkdvkit.xsb_norms import (AliasingWarning, SpaceTimeField, cutoff_gain_check,
                               cutoff_gain_example, make_params, running_integral_field,
                               spacetime_l2, time_grid, xsb_norm)


def linear_mode(k, samples=1024, amp=1.0):
    t = time_grid(samples)
    return SpaceTimeField.from_modes({k: amp * phi_eval(t) * np.exp(1j * k ** 3 * t)}, t_grid=t)


def mixed_field(seed=0, N=3, samples=1024):
    rng = np.random.default_rng(seed)
    t = time_grid(samples)
    prof = {n: (rng.normal() + 1j * rng.normal()) * phi_eval(t) * np.exp(1j * rng.normal() * t)
            for n in range(-N, N + 1)}
    return SpaceTimeField.from_modes(prof, n_max=N, t_grid=t)


def test_zero_field_norm():
    t = time_grid(256)
    z = SpaceTimeField(np.zeros((256, 3)), t, 1)
    assert xsb_norm(z, 0.5, 0.5, 2, 2) == 0
    assert spacetime_l2(z) == 0


def test_parseval_against_spacetime_l2():
    F = mixed_field(1)
    assert abs(xsb_norm(F, 0, 0, 2, 2) - spacetime_l2(F)) < 1e-8
    assert abs(xsb_norm(F, 0, 0, 2, 2, method="direct") - spacetime_l2(F)) < 1e-8


def test_spacetime_l2_of_cutoff():
    # (1/2π) ∫ φ² dt by quadrature on a finer grid
    t = time_grid(8192)
    F = SpaceTimeField.from_modes({0: phi_eval}, t_grid=t)
    ref = np.sqrt(np.trapezoid(phi_eval(t) ** 2, t) / (2 * np.pi))
    assert abs(spacetime_l2(F) - ref) < 1e-10


@pytest.mark.parametrize("k", [1, 4, 8])
def test_modulation_invariance_of_linear_solutions(k):
    # φ(t)e^{ik³t} has the same X^{0,b} norm as φ(t) once the dispersion is removed
    ref = xsb_norm(linear_mode(0, 4096), 0, 0.7, 2, 2, method="direct")
    val = xsb_norm(linear_mode(k, 4096), 0, 0.7, 2, 2, method="direct")
    assert abs(val / ref - 1) < 0.02
    assert abs(xsb_norm(linear_mode(k, 4096), 0, 0.7, 2, 2) / ref - 1) < 1e-9


def test_conjugate_and_direct_methods_agree():
    F = mixed_field(2, N=2, samples=2048)
    for s, b, p, q in [(0.5, 0.5, 2, 2), (0.5, 0.95, 2, 5.0), (0.5, 0.9, 2, 3.0)]:
        a = xsb_norm(F, s, b, p, q)
        d = xsb_norm(F, s, b, p, q, method="direct")
        assert abs(a - d) < 1e-6 * a


def test_methods_converge_together_for_rough_exponent():
    # |F̂|^{3/2} has kinks at the zeros of F̂, so the τ sums converge algebraically
    F = mixed_field(2, N=2, samples=2048)
    gaps = []
    for pad in (1, 16):
        a = xsb_norm(F, 0.0, 0.9, 3, 1.5, pad=pad)
        gaps.append(abs(a - xsb_norm(F, 0.0, 0.9, 3, 1.5, method="direct", pad=pad)) / a)
    assert gaps[1] < gaps[0] / 100 and gaps[1] < 1e-5


def test_direct_method_warns_when_window_too_small():
    with pytest.warns(AliasingWarning):
        # 5³ = 125 sits at the edge of the τ window π/dt ≈ 125.7
        xsb_norm(linear_mode(5, 320), 0, 0.5, 2, 2, method="direct")


def test_scaling_homogeneity_and_b_monotone():
    F = mixed_field(3)
    base = xsb_norm(F, 0.5, 0.6, 2, 3)
    assert abs(xsb_norm(F.scaled(-2.5j), 0.5, 0.6, 2, 3) - 2.5 * base) < 1e-12 * base
    vals = [xsb_norm(F, 0.5, b, 2, 3) for b in (0.0, 0.3, 0.6, 0.9)]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_field_validation():
    t = time_grid(64)
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros((64, 2)), t, 1)
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros((3, 3)), np.array([0.0, 0.1, 0.3]), 1)
    with pytest.raises(ValueError):
        xsb_norm(mixed_field(), 0, 0, 0.5, 2)


def test_make_params_values():
    P = make_params(0.05)
    assert (P.b0, P.b1) == pytest.approx((0.9, 0.95))
    assert (P.q0, P.q1) == pytest.approx((5.0, 1 / 0.225))
    assert (P.r0, P.r1, P.r2) == pytest.approx((1 / 0.55, 1 / 0.6, 1 / 0.65))
    assert P.z0 == (0.5, P.b0, P.q0) and P.y1 == (0.5, 0.5, P.r1)
    with pytest.raises(ValueError):
        make_params(0.2)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 0.1))
def test_param_ordering(delta):
    P = make_params(delta)
    assert P.b0 < P.b1 and P.q1 < P.q0 and P.r2 < P.r1 < P.r0
    assert P.b0 > 1 - 1 / P.q0


def test_running_integral_field():
    t = time_grid(2048)
    gen = SpaceTimeField.from_modes({1: phi_eval}, t_grid=t)
    F = running_integral_field(gen, outer_cutoff=False)
    k0 = int(np.argmin(np.abs(t)))
    assert F.values[k0, 2] == 0
    # ∫₀ᵗ φ = t on [-1, 1]
    inside = np.abs(t) <= 1
    assert np.max(np.abs(F.values[inside, 2] - t[inside])) < 1e-12
    with pytest.raises(ValueError):
        running_integral_field(SpaceTimeField.from_modes({1: phi_eval}, t_grid=t[1:-1:2]))


def test_cutoff_gain_zero_field_and_theta_range():
    P = make_params(0.05)
    t = time_grid(1024)
    z = SpaceTimeField(np.zeros((1024, 3)), t, 1)
    rep = cutoff_gain_check(z, [0.5, 0.25], 0.02, P)
    assert rep.passed is True and "zero_field" in rep.flags
    F = cutoff_gain_example(1024)
    rep = cutoff_gain_check(F, [0.5, 0.25], 0.5, P)
    assert rep.passed is None and "theta_outside_lemma_range" in rep.flags
    assert all(np.isfinite(rep.ratios))


def test_cutoff_gain_example_passes():
    P = make_params(0.05)
    rep = cutoff_gain_check(cutoff_gain_example(2 ** 14), [0.5, 0.25, 0.125, 0.0625, 0.03125],
                            0.025, P)
    assert rep.passed, rep.to_dict()
