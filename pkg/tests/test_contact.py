import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from taxel.contact import (
    ForceSequence,
    HertzContact,
    PressTrajectory,
    SpringModel,
    force_gradient,
    hardness_from_stiffness,
    hertz_area,
    hertz_radius,
    infer_stiffness,
    object_stiffness,
    series_stiffness,
    stiffness_from_hardness,
    synth_force_sequence,
    trimmed_window,
)
from taxel.errors import DomainError, InfeasibleModelError

stiff = st.floats(0.5, 50.0)


def harmonic(ks):
    return float(1 / sum(Fraction(1) / Fraction(k) for k in ks))


@pytest.mark.parametrize("ks, expected", [([5.0], 5.0), ([2.0, 2.0], 1.0), ([3.0, 6.0], 2.0)])
def test_series_stiffness_known_values(ks, expected):
    assert series_stiffness(ks) == pytest.approx(expected, rel=1e-15)


@given(st.lists(stiff, min_size=1, max_size=5))
def test_series_stiffness_matches_exact_harmonic_sum_and_is_below_min(ks):
    k = series_stiffness(ks)
    assert k == pytest.approx(harmonic(ks), rel=1e-12)
    assert k <= min(ks) * (1 + 1e-12)


@pytest.mark.parametrize("ks", [[0.0, 1.0], [-1.0], []])
def test_series_stiffness_rejects_bad_input(ks):
    with pytest.raises(DomainError):
        series_stiffness(ks)


def test_object_stiffness_examples():
    assert object_stiffness(2.0, 6.0) == pytest.approx(3.0, rel=1e-14)
    assert object_stiffness(6.0, 12.0) == pytest.approx(12.0, rel=1e-14)
    with pytest.raises(InfeasibleModelError):
        object_stiffness(1.0, 1.0)
    with pytest.raises(InfeasibleModelError):
        object_stiffness(2.0, 1.0)


@given(stiff, stiff)
def test_object_stiffness_inverts_series(k1, k2):
    assert object_stiffness(series_stiffness([k1, k2]), k2) == pytest.approx(k1, rel=1e-9)


def test_synth_force_examples():
    seq = synth_force_sequence(SpringModel(10.0, 10.0), PressTrajectory(v=0.5, dt=0.1, n_steps=21))
    assert seq.F[-1] == pytest.approx(5.0, rel=1e-12)
    assert seq.F[0] == 0.0
    rigid = synth_force_sequence(SpringModel(math.inf, 4.0), PressTrajectory(v=1.0, dt=0.5, n_steps=3))
    assert rigid.F[-1] == pytest.approx(4.0, rel=1e-12)


def test_synth_force_rejects_press_beyond_linear_regime():
    with pytest.raises(DomainError):
        synth_force_sequence(SpringModel(5.0), PressTrajectory(v=1.0, dt=0.5, n_steps=10), max_indentation=2.0)


def test_trajectory_to_depth_reaches_depth():
    tr = PressTrajectory.to_depth(0.5, 1.0, 0.1)
    assert tr.n_steps == 21
    assert tr.x_total()[-1] == pytest.approx(1.0)


def test_force_gradient_examples():
    t = np.arange(12) * 0.1
    assert np.allclose(force_gradient(ForceSequence(3 * t, 0.1)), 3.0, atol=1e-12)
    assert np.all(force_gradient(ForceSequence(np.full(5, 2.5), 0.1)) == 0)
    G = force_gradient(ForceSequence(np.array([0, 0.1, 0.4, 0.9]), 1.0))
    assert G.shape == (4,)
    assert G[1:3] == pytest.approx([0.2, 0.4])
    assert G[0] == pytest.approx(0.1) and G[-1] == pytest.approx(0.5)
    with pytest.raises(DomainError):
        force_gradient(ForceSequence(np.array([0.0, 1.0]), 1.0))


def test_trimmed_window_drops_ten_percent_each_side():
    assert trimmed_window(20) == slice(2, 18)
    assert trimmed_window(3) == slice(0, 3)


def test_infer_stiffness_noise_free_round_trip():
    seq = synth_force_sequence(SpringModel(8.0, 12.0), PressTrajectory.to_depth(0.5, 1.0, 0.1))
    assert infer_stiffness(seq, 0.5, 12.0) == pytest.approx(8.0, rel=1e-9)


def test_infer_stiffness_rejects_gradient_at_k2():
    v, k2 = 0.5, 12.0
    seq = ForceSequence(v * k2 * np.arange(10) * 0.1, 0.1)
    with pytest.raises(InfeasibleModelError):
        infer_stiffness(seq, v, k2)


def test_infer_stiffness_under_one_percent_noise():
    traj = PressTrajectory.to_depth(0.5, 1.0, 0.1)
    for seed in range(20):
        seq = synth_force_sequence(SpringModel(8.0, 12.0), traj, noise=0.01, seed=seed)
        assert infer_stiffness(seq, 0.5, 12.0) == pytest.approx(8.0, rel=0.10)


def test_hardness_stiffness_maps():
    assert hardness_from_stiffness(10.0, 0.2) == pytest.approx(50.0)
    assert hardness_from_stiffness(0.0, 0.2) == 0.0
    with pytest.raises(DomainError):
        hardness_from_stiffness(1.0, 0.0)


@given(st.floats(10.0, 80.0), st.floats(0.01, 5.0))
def test_hardness_round_trip(H, N):
    assert hardness_from_stiffness(stiffness_from_hardness(H, N), N) == pytest.approx(H, rel=1e-14)


def test_hertz_examples():
    assert hertz_radius(HertzContact(5.0, 0.8)) == pytest.approx(2.0, rel=1e-15)
    assert hertz_radius(HertzContact(5.0, 0.0)) == 0.0
    assert hertz_radius(HertzContact(1.0, 1.0)) == 1.0
    assert hertz_area(HertzContact(5.0, 0.8)) == pytest.approx(12.566370614359172, rel=1e-12)
    assert hertz_area(HertzContact(5.0, 0.0)) == 0.0
    assert hertz_area(HertzContact(5.0, 0.6)) == pytest.approx(2 * hertz_area(HertzContact(5.0, 0.3)))
    with pytest.raises(DomainError):
        HertzContact(1.0, 2.0)


@given(st.floats(0.5, 20.0), st.floats(0.0, 0.5))
def test_hertz_area_is_pi_r_squared(R, Z):
    c = HertzContact(R, Z)
    assert hertz_area(c) == pytest.approx(math.pi * hertz_radius(c) ** 2, rel=1e-12, abs=1e-15)


@given(stiff, st.floats(6.0, 40.0), st.floats(0.1, 2.0))
def test_elastomer_share_splits_total_displacement(k1, k2, v):
    m = SpringModel(k1, k2)
    tr = PressTrajectory(v=v, dt=0.05, n_steps=10)
    # force balance: k1 * x1 == k2 * x2 == F
    F = synth_force_sequence(m, tr, max_indentation=math.inf).F
    assert np.allclose(k2 * tr.x2(m), F, rtol=1e-12, atol=1e-12)
    assert np.allclose(k1 * tr.x1(m), F, rtol=1e-9, atol=1e-12)
